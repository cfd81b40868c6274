"""Photo-consistency estimation and next-best-view selection on triangle meshes."""

import json

from ._core import (
    Camera,
    InputError,
    Intrinsics,
    Mesh,
    PreconditionError,
    bessel_i0,
    candidate_ring,
    config,
    facet_visible,
    icosphere,
    load_cameras,
    load_mesh,
    look_at,
    nbv,
    perturb,
    pri,
    read_image,
    render,
    save_cameras,
    select_best,
    von_mises_log_density,
    worst_facets,
    write_pgm,
)
from ._core import simulate as _simulate

__all__ = [
    "Camera",
    "InputError",
    "Intrinsics",
    "Mesh",
    "PreconditionError",
    "bessel_i0",
    "candidate_ring",
    "config",
    "facet_visible",
    "icosphere",
    "load_cameras",
    "load_mesh",
    "look_at",
    "nbv",
    "perturb",
    "pri",
    "read_image",
    "render",
    "save_cameras",
    "select_best",
    "simulate",
    "von_mises_log_density",
    "worst_facets",
    "write_pgm",
]


def simulate(scene, out_dir, iterations=1, initial_views=3, config=None):
    """Run the closed loop on a scene file and return the iteration records as dicts."""
    args = [scene, out_dir, iterations, initial_views]
    if config is not None:
        args.append(config)
    return [json.loads(line) for line in _simulate(*args)]
