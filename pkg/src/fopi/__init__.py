"""Design and verification of fractional-order PI^lambda speed controllers."""
from .errors import *  # noqa: F401,F403
from .quasipoly import (
    FractionalTransferFunction,
    PiLambdaController,
    QuasiPolynomial,
    controller_eval,
    focq,
    qp_eval,
    s_power_jw,
    tf_eval,
)
from .motor import BENCH_MOTOR, MotorParams, derive_tf, load_config, parse_config
from .locus import (
    LocusPoint,
    StabilityRegion,
    Verdict,
    build_region,
    classify_point,
    global_regions,
    locus_curve,
    locus_point,
)
from .margins import DesignSpec, MarginReport, compute_margins, design_search, open_loop_response
from .matignon import CommensuratePolynomial, StabilityVerdict, is_stable, poly_roots, to_commensurate
from .timesim import (
    Metrics,
    SimConfig,
    SimTrace,
    compute_metrics,
    fractional_integral,
    gl_weights,
    run_scenario_suite,
    simulate_closed_loop,
)
from .relay import RelayConfig, RelayResult, relay_experiment, ultimate_gain, zn_pi

__version__ = "0.1.0"

#: reference controllers for the bench motor
REFERENCE_FO = PiLambdaController(2.5732, 1.45204, 1.2)
REFERENCE_IO = PiLambdaController(1.431, 0.72, 1.0)
