"""Gilbert-algorithm entanglement witnesses for five-tile UPB bound entangled states."""

from .decay import DecayFit, classify, fit_decay, fit_points
from .gilbert import (
    GilbertConfig,
    GilbertState,
    GilbertTrace,
    checkpoint_load,
    checkpoint_save,
    line_minimize,
    propose_trial,
    run,
    seesaw_max,
)
from .hermitian import (
    BipartiteDims,
    ProductVector,
    eig_hermitian,
    hs_distance,
    hs_inner,
    partial_transpose,
    product_projector,
    random_local_state,
    traceless_part,
)
from .tiles import (
    Rect,
    TileLayout,
    UpbState,
    build_state,
    enumerate_layouts,
    pinwheel,
    tile_projector,
    tile_sym_projector,
    validate_state,
)
from .witness import (
    WitnessReport,
    bgr_witness,
    gilbert_witness,
    hyperplane_distance,
    lambda_max,
)

__version__ = "0.1.0"
