"""Command-line entry point: ``gazeid <subcommand> ...``.

Exit codes: 0 ok, 1 I/O or parse error, 2 invalid spec/config, 3 insufficient
enrollment data, 4 identity mismatch between model and probes.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from gazeid.data import ScreenGeometry, StimulusKind, discover_recordings, load_recording
from gazeid.errors import (
    GazeIdError,
    InsufficientEnrollmentData,
    InvalidRecording,
    InvalidSpec,
    NonMonotonicTimestamps,
    ParseError,
)
from gazeid.evaluation import evaluate, write_cmc_csv, write_det_csv
from gazeid.features import write_features_csv
from gazeid.model import RbfModel, identify, score_probe
from gazeid.pipeline import ModelConfig, PipelineConfig, enroll, process, score_matrix
from gazeid.preprocess import SgConfig
from gazeid.segment import FIXATION, SACCADE, IvtConfig, write_segments_csv
from gazeid.synth import SynthSpec, write_dataset

log = logging.getLogger("gazeid")

EXIT_OK, EXIT_IO, EXIT_SPEC, EXIT_ENROLL, EXIT_MISMATCH = 0, 1, 2, 3, 4

_SG, _IVT, _MODEL, _GEOM = SgConfig(), IvtConfig(), ModelConfig(), ScreenGeometry()


class IdentityMismatch(GazeIdError):
    pass


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Append real defaults only; None and on/off switches are left bare."""

    def _get_help_string(self, action):
        if action.default is None or isinstance(action.default, bool):
            return action.help
        return super()._get_help_string(action)


def _add_pipeline_flags(p):
    g = p.add_argument_group("pipeline (override the config file)")
    g.add_argument("--config", type=Path, help="INI file with [geometry] [sg] [ivt] [model] [pipeline] sections")
    g.add_argument("--stimulus", choices=[k.value for k in StimulusKind], help="stimulus kind (default: SYNTH)")
    g.add_argument("--poly-order", type=int, help=f"Savitzky-Golay polynomial order (default: {_SG.poly_order})")
    g.add_argument("--frame-len", type=int, help=f"Savitzky-Golay frame length (default: {_SG.frame_len})")
    g.add_argument("--vt", type=float, help=f"I-VT velocity threshold, deg/s (default: {_IVT.velocity_threshold_dps:g})")
    g.add_argument("--mdf", type=float, help=f"minimum fixation duration, ms (default: {_IVT.min_fixation_ms:g})")
    g.add_argument("--min-saccade", type=float, help=f"minimum saccade duration, ms (default: {_IVT.min_saccade_ms:g})")
    g.add_argument("--distance-mm", type=float, help=f"head-to-screen distance (default: {_GEOM.distance_mm:g})")
    g.add_argument("--width-mm", type=float, help=f"screen width (default: {_GEOM.width_mm:g})")
    g.add_argument("--height-mm", type=float, help=f"screen height (default: {_GEOM.height_mm:g})")
    g.add_argument("--width-px", type=int, help=f"screen width in pixels (default: {_GEOM.width_px})")
    g.add_argument("--height-px", type=int, help=f"screen height in pixels (default: {_GEOM.height_px})")


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--k", type=int, help=f"prototypes per subject and channel (default: {_MODEL.k})")
    g.add_argument("--lambda", dest="fusion_lambda", type=float,
                   help=f"fixation weight in score fusion (default: {_MODEL.fusion_lambda:g})")
    g.add_argument("--max-iter", type=int, help=f"K-means iteration cap (default: {_MODEL.max_iter})")
    g.add_argument("--seed", type=int, help=f"training seed (default: {_MODEL.seed})")
    g.add_argument("--mask", help="feature mask: auto, all, or a masks JSON from select-features (default: auto)")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    cfg = cfg.with_overrides(
        sg={"poly_order": args.poly_order, "frame_len": args.frame_len},
        ivt={"velocity_threshold_dps": args.vt, "min_fixation_ms": args.mdf, "min_saccade_ms": args.min_saccade},
        geometry={"distance_mm": args.distance_mm, "width_mm": args.width_mm, "height_mm": args.height_mm,
                  "width_px": args.width_px, "height_px": args.height_px},
        model={k: getattr(args, k, None) for k in ("k", "fusion_lambda", "max_iter", "seed", "mask")}
        | {"selection_rounds": getattr(args, "rounds", None)},
    )
    if args.stimulus:
        cfg = PipelineConfig(cfg.geometry, cfg.sg, cfg.ivt, cfg.model, StimulusKind(args.stimulus))
    return cfg


def _load(path, cfg: PipelineConfig):
    return load_recording(path, cfg.geometry, stimulus_kind=cfg.stimulus_kind)


def _dataset(directory, session, cfg):
    paths = discover_recordings(directory, session)
    if not paths:
        raise FileNotFoundError(f"no session-{session} recordings in {directory}")
    return [process(_load(p, cfg), cfg) for p in paths]


def cmd_synth(args):
    spec = SynthSpec(
        n_subjects=args.subjects,
        sessions_per_subject=args.sessions,
        duration_s=args.duration,
        rate_hz=args.rate,
        master_seed=args.seed,
    )
    paths = write_dataset(spec, args.out)
    print(f"wrote {len(paths)} recordings and truth.csv to {args.out}")
    return EXIT_OK


def cmd_ingest_check(args):
    cfg = _config(args)
    status = EXIT_OK
    for target in args.paths:
        files = discover_recordings(target) if Path(target).is_dir() else [Path(target)]
        for path in files:
            try:
                rec = _load(path, cfg)
            except (ParseError, NonMonotonicTimestamps, InvalidRecording) as exc:
                print(f"FAIL {path}: {exc}")
                status = EXIT_IO
                continue
            print(f"ok   {path}: subject={rec.subject_id} session={rec.session_id} samples={len(rec)} "
                  f"rate={rec.rate_hz:g}Hz invalid={int((~rec.valid).sum())}")
    return status


def cmd_segment(args):
    cfg = _config(args)
    p = process(_load(args.recording, cfg), cfg)
    out = args.out or Path(args.recording).with_suffix(".segments.csv")
    write_segments_csv(p.segments, out)
    n_fix = len(p.segments.of_kind(FIXATION))
    n_sacc = len(p.segments.of_kind(SACCADE))
    print(f"{p.recording.key}: {n_fix} fixations, {n_sacc} saccades -> {out}")
    return EXIT_OK


def cmd_features(args):
    cfg = _config(args)
    processed = _dataset(args.dataset, args.session, cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for kind, attr in ((FIXATION, "fixations"), (SACCADE, "saccades")):
        rows = [(p.subject_id, p.recording.session_id, kind, getattr(p, attr)) for p in processed]
        write_features_csv(args.out_dir / f"{attr}.csv", rows)
    print(f"features for {len(processed)} recordings -> {args.out_dir}")
    return EXIT_OK


def _per_subject(processed, attr):
    out: dict[str, list] = {}
    for p in sorted(processed, key=lambda p: (p.subject_id, p.recording.session_id)):
        out.setdefault(p.subject_id, []).append(getattr(p, attr))
    return {s: np.vstack(v) for s, v in out.items()}


def cmd_select_features(args):
    from gazeid.features import FeatureMask
    from gazeid.selection import backward_select, save_masks

    cfg = _config(args)
    processed = _dataset(args.dataset, args.session, cfg)
    m = cfg.model
    masks = []
    for kind, attr in ((FIXATION, "fixations"), (SACCADE, "saccades")):
        mask, votes = backward_select(_per_subject(processed, attr), kind, rounds=m.selection_rounds,
                                      seed=m.seed, k=m.k, max_iter=m.max_iter, return_votes=True)
        mask = FeatureMask(mask.include, kind, cfg.stimulus_kind)
        print(f"{kind.name.lower()}: kept {len(mask.names)}/{len(votes)}: {', '.join(mask.names)}")
        masks.append(mask)
    save_masks(*masks, args.out)
    print(f"masks -> {args.out}")
    return EXIT_OK


def cmd_train(args):
    cfg = _config(args)
    processed = _dataset(args.dataset, args.session, cfg)
    for p in sorted(processed, key=lambda p: p.subject_id):
        print(f"{p.subject_id}: {len(p.fixations)} fixations, {len(p.saccades)} saccades")
    model = enroll(processed, cfg)
    model.save(args.out)
    print(f"model with {len(model.identities)} identities, "
          f"{len(model.fixation.neurons)} fixation + {len(model.saccade.neurons)} saccade neurons -> {args.out}")
    return EXIT_OK


def _model_and_config(path):
    model = RbfModel.load(path)
    return model, PipelineConfig.from_dict(model.config) if model.config else PipelineConfig()


def cmd_identify(args):
    model, cfg = _model_and_config(args.model)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["probe", "identity", "score"])
        for path in args.recordings:
            p = process(_load(path, cfg), cfg)
            score = score_probe(model, p.fixations, p.saccades)
            best = identify(score)
            writer.writerow([p.recording.key, model.identities[best], repr(float(score.fused[best]))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_evaluate(args):
    model, cfg = _model_and_config(args.model)
    probes = _dataset(args.dataset, args.session, cfg)
    enrolled = set(model.identities)
    probe_ids = {p.subject_id for p in probes}
    if probe_ids != enrolled:
        missing = sorted(enrolled - probe_ids)
        unknown = sorted(probe_ids - enrolled)
        raise IdentityMismatch(f"identity mismatch: not probed {missing}, not enrolled {unknown}")
    d = score_matrix(model, probes)
    report = evaluate(d, one_to_one=args.one_to_one)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(report.dumps(), encoding="utf-8")
    write_det_csv(report, out / "det.csv")
    write_cmc_csv(report, out / "cmc.csv")
    if args.figures:
        from gazeid.plots import plot_cmc, plot_det

        plot_det(report, out / "det.png")
        plot_cmc(report, out / "cmc.png")
    line = f"R1 {report.r1:.4f}  EER {report.eer:.4f}"
    if report.r1_one_to_one is not None:
        line += f"  R1(one-to-one) {report.r1_one_to_one:.4f}"
    print(line)
    print(f"report -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazeid", description="Eye-movement biometric identification.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = _HelpFormatter

    p = sub.add_parser("synth", help="generate a synthetic dataset", formatter_class=fmt)
    p.add_argument("--out", type=Path, default=Path("synth_data"), help="output directory")
    p.add_argument("--subjects", type=int, default=20, help="number of subjects")
    p.add_argument("--sessions", type=int, default=2, help="sessions per subject")
    p.add_argument("--duration", type=float, default=100.0, help="recording length, seconds")
    p.add_argument("--rate", type=float, default=250.0, help="sampling rate, Hz (250 or 1000)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest-check", formatter_class=fmt, help="validate recording CSV files")
    p.add_argument("paths", nargs="+", type=Path, help="CSV files or directories")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_ingest_check)

    p = sub.add_parser("segment", formatter_class=fmt, help="dump the fixation/saccade segmentation of one recording")
    p.add_argument("recording", type=Path, help="recording CSV")
    p.add_argument("--out", type=Path, help="segments CSV (default: <recording>.segments.csv)")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("features", help="export per-segment feature matrices", formatter_class=fmt)
    p.add_argument("dataset", type=Path, help="directory of <subject>_<session>.csv recordings")
    p.add_argument("--session", default="1", help="session to read")
    p.add_argument("--out-dir", type=Path, default=Path("features"), help="output directory")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("select-features", help="backward feature selection", formatter_class=fmt)
    p.add_argument("dataset", type=Path, help="directory of <subject>_<session>.csv recordings")
    p.add_argument("--session", default="1", help="session to read")
    p.add_argument("--rounds", type=int, help=f"random 50%% splits (default: {_MODEL.selection_rounds})")
    p.add_argument("--out", type=Path, default=Path("masks.json"), help="masks JSON")
    _add_pipeline_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_select_features)

    p = sub.add_parser("train", help="enroll subjects from one session", formatter_class=fmt)
    p.add_argument("dataset", type=Path, help="directory of <subject>_<session>.csv recordings")
    p.add_argument("--session", default="1", help="session to read")
    p.add_argument("--out", type=Path, default=Path("model.json"), help="model JSON")
    _add_pipeline_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("identify", formatter_class=fmt, help="identify probe recordings")
    p.add_argument("recordings", nargs="+", type=Path, help="probe recording CSVs")
    p.add_argument("--model", type=Path, required=True, help="model JSON written by train")
    p.add_argument("--out", type=Path, help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="score a session against a model", formatter_class=fmt)
    p.add_argument("dataset", type=Path, help="directory of <subject>_<session>.csv recordings")
    p.add_argument("--model", type=Path, required=True, help="model JSON written by train")
    p.add_argument("--session", default="2", help="probe session")
    p.add_argument("--out-dir", type=Path, default=Path("report"), help="metrics, CSV and figure directory")
    p.add_argument("--one-to-one", action="store_true", help="also report R1 under greedy one-to-one matching")
    p.add_argument("--no-figures", dest="figures", action="store_false", help="skip the DET/CMC PNG figures")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except InsufficientEnrollmentData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENROLL
    except IdentityMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (OSError, ParseError, NonMonotonicTimestamps, InvalidRecording) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
