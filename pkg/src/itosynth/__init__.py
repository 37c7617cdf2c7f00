"""Half-line Markov processes synthesised from Poisson point processes of
time-changed Brownian excursions, and statistical checks of their scaling
limits."""
__version__ = "0.1.0"

from .excursion import (DEFAULT_POLICY, Excursion, PathStats, SamplingError, StepPolicy,
                        path_stats, sample_absorbed_bm, sample_excursion_above)
from .existence import BoundaryData, ExistenceReport, check_existence
from .local_time import LocalTimeField, estimate_local_time, occupation_residual
from .measures import (BoundaryTriple, JumpFunction, JumpMeasure, ModelError, RegimeError,
                       ScalingRegime, SpeedMeasure, canonical_j, canonical_m, J_to_j_c,
                       j_c_to_J, jump_measure, limit_triple, power_J, scale_triple,
                       speed_measure, step_J, triple)
from .rng import RngStream
from .synthesis import (HorizonError, MarkedPointProcess, SyntheticPath, boundary_local_time,
                        build_eta, build_path, intensity, laplace_exponent, sample_marginals,
                        sample_point_process, synthesize)
from .time_change import (Clock, ClockError, clock, sample_nm_above, sample_Qmx, shift,
                          time_change_excursion)
from .limits import (CadlagPath, ExperimentSpec, J1Report, KSReport, TailFit, j1_distance,
                     scaling_identity_check, stable_index, verify_convergent, verify_divergent)
