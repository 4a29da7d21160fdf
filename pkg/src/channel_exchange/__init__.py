"""Channel-exchange production probabilities and electron-photon entanglement
in high-energy (massless) Compton scattering."""
from .amplitudes import (
    OUT_STATES,
    ExchangeQuad,
    OutChannelState,
    Quantity,
    compare_paths,
    direct_terms,
    exchange_closed,
    exchange_closed_quad,
    exchange_trace,
    exchange_trace_quad,
    klein_nishina_massless,
    summed_direct_terms,
    summed_exchange,
    total_per_state,
    total_quad,
)
from .conventions import CANONICAL, Conventions
from .dirac import ElectronSpin
from .entanglement import concurrence_bounds, find_jump_points, quad_to_coefficients, zero_concurrence_contour
from .kinematics import MomentumSet, ScatterConfig, solve_kinematics
from .polarization import PhotonPolarization, circular_polarization
from .scan import ScanSpec, calibrate, point_report, report_discrepancy, run_scan, scan_fig3, scan_fig4, scan_fig5
from .tensor import FourVector

__version__ = "0.1.0"
