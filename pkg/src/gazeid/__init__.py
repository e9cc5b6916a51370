"""Eye-movement biometric identification from fixation and saccade statistics."""

from gazeid.data import GazeRecording, GazeSample, ScreenGeometry, StimulusKind, load_recording, save_recording, to_screen
from gazeid.evaluation import ScoreMatrix, compute_cmc, compute_eer, evaluate, normalize_scores, one_to_one_match
from gazeid.model import RbfModel, identify, score_probe
from gazeid.pipeline import PipelineConfig, enroll, process, score_matrix
from gazeid.preprocess import SgConfig, differentiate, kinematics, sg_smooth
from gazeid.segment import IvtConfig, build_segments, ivt_classify
from gazeid.synth import SynthSpec, generate

__version__ = "0.1.0"
