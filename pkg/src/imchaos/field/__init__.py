from imchaos.field.models import Domain, LogCorrelatedModel, covariance, circle, unit_disc, unit_square
from imchaos.field.schemes import ApproxScheme, SchemeKind
from imchaos.field.grids import Grid, circle_grid, square_grid, disc_grid
from imchaos.field.samplers import (
    FieldRealization,
    sample_circle_field,
    sample_square_gff,
    sample_disc_gff,
)
from imchaos.field.standard import check_standard_approximation
from imchaos.field.norms import sobolev_norm, besov_block_norms

__all__ = [
    "Domain",
    "LogCorrelatedModel",
    "covariance",
    "circle",
    "unit_disc",
    "unit_square",
    "ApproxScheme",
    "SchemeKind",
    "Grid",
    "circle_grid",
    "square_grid",
    "disc_grid",
    "FieldRealization",
    "sample_circle_field",
    "sample_square_gff",
    "sample_disc_gff",
    "check_standard_approximation",
    "sobolev_norm",
    "besov_block_norms",
]
