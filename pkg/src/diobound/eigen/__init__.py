"""Eigenpairs of -Laplace + V with Dirichlet data on raster masks."""

from .domain import (
    MASK_GENERATORS,
    DomainMask,
    disk_mask,
    disk_stencil,
    erode,
    koch_mask,
    lshape_mask,
    make_mask,
    percolation_mask,
    rectangle_mask,
)
from .solver import (
    ACCURACY_WINDOW,
    START_SEED,
    EigenPair,
    ProblemSpec,
    accuracy_ceiling,
    assemble,
    discrete_box_eigenvalue,
    read_pairs,
    rectangle_oracle,
    solve,
    solve_window,
    write_pairs,
)
