"""Registration of affine co-variant feature frames by GMM/EM.

Frames (2x2 shape matrix + 2-D location) are handled as 6-D points split
into three 2-D blocks. Three transformation models are available: rigid
(scaled rotation), affine, and non-rigid (kernel displacement fields).
"""

from .affine import AffineParams, SingularGram, affine_m_step
from .engine import (EngineConfig, MatchResult, extract_correspondences,
                     register)
from .frames import (FeatureFrame, FrameSet, FrameVec6, RelativeTransform,
                     SingularFrame, apply_transform, from_vec6,
                     relative_transform, to_vec6)
from .fileio import (FormatError, ResultRecord, read_frameset, read_result,
                     read_truth, write_frameset, write_result, write_truth)
from .metrics import BatchSummary, EvalReport, evaluate, run_batch
from .mixture import (BlockCovariance, MixtureConfig, PosteriorMatrix, e_step,
                      init_covariance, neg_log_likelihood, q_value,
                      update_omega)
from .nonrigid import NonRigidParams, build_kernels, nonrigid_m_step
from .rigid import DegenerateResponsibility, RigidParams, rigid_m_step
from .synth import InvalidSpec, Scene, SceneSpec, WarpField, generate

__version__ = "0.1.0"
