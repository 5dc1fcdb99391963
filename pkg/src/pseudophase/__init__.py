"""Classical optical fields tagged with pseudorandom phase sequences."""

__version__ = "0.1.0"

from .sequences import (  # noqa: E402
    PhaseSequence,
    agreement_count,
    analytic_correlation,
    builtin_table,
    verify_family,
    xor_compose,
)
from .fields import Mode, OpticalField, make_source, mode_project, modulate, scale, superpose  # noqa: E402
from .components import coupler2, mode_filter, pbs, rotator, splitter  # noqa: E402
from .netlist import evaluate_network, parse_netlist, pretty_print  # noqa: E402
from .detection import balanced_pair, correlate, correlation_scan, photodetect  # noqa: E402
from .analysis import ModeMatrix, MPresence, classify_branch, extract_m_matrix, extract_period, reconstruct_terms  # noqa: E402
from .scenarios import build_ghz, build_product, build_shor15, build_w  # noqa: E402
