"""Bridge-deck inspection data fusion: perspective correction, stitching,
geo-referencing and a defect catalog."""

from ._core import (
    CameraRig,
    DeckfuseError,
    OrthoGrid,
    Store,
    ground_of_pixel,
    grid_covering,
    ipm_pixel,
    load_pnm,
    nominal_gsd,
    plan_flight_height,
    render_orthophoto,
    run_cli,
    save_pnm,
    to_geo,
    to_local,
)

__all__ = [
    "CameraRig",
    "DeckfuseError",
    "OrthoGrid",
    "Store",
    "ground_of_pixel",
    "grid_covering",
    "ipm_pixel",
    "load_pnm",
    "nominal_gsd",
    "plan_flight_height",
    "render_orthophoto",
    "run_cli",
    "save_pnm",
    "to_geo",
    "to_local",
]
