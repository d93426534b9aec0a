"""Rotation numbers, Arnold tongues and mode-locking certificates for
quasiperiodically forced circle homeomorphisms."""

from .dynamics import (GOLDEN_MEAN, Omega, QpfSystem, RotnumEstimate,
                       fibred_rotation_number, rotation_number_circle,
                       uniform_convergence_probe)
from .fields import (ClosedFormField, PeriodicPL, ThetaShiftField,
                     TranslationField, arnold_field, constant_field,
                     field_from_obj, interpolate)
from .plmaps import PLLift
from .tongues import (RationalizationResult, TongueBoundary, rationalize_base,
                      tongue_boundary)
from .locking import (FibreSignProfile, LockOutcome, conjugacy_witness,
                      interval_surgery, lock_all_fibres, sign_profile)
from .pwa import PwaField, Triangulation, pwa_approximate, triangulate
from .partition import RefinedPartition, refine_partition
from .zeroset import ZeroSetArrangement, extract_zero_set, sweep_zero_set
from .genericity import genericize
from .curves import CurvePair, build_curves, continue_to_target, \
    shadow_interval, tilt_verticals
from .certify import (LockCertificate, PipelineResult, certify_annulus,
                      mode_lock_pipeline, pick_shift, verify_certificate)
from .staircase import (StaircaseData, TwistFamily, arnold_family,
                        detect_plateaus, interpolate_family, sweep_family)

__version__ = "0.1.0"
