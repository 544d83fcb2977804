"""2D TE electromagnetic reverse time migration: forward data, imaging, identity checks."""
from .geometry import Aperture, BoundaryCondition, Component, ParametricBoundary, SamplingGrid, Scene
from .green import WaveConfig
from .forward import add_noise, generate_dataset
from .rtm import cross_section, image, image_multifreq, image_points

__version__ = "0.1.0"

__all__ = [
    "Aperture",
    "BoundaryCondition",
    "Component",
    "ParametricBoundary",
    "SamplingGrid",
    "Scene",
    "WaveConfig",
    "add_noise",
    "generate_dataset",
    "cross_section",
    "image",
    "image_multifreq",
    "image_points",
    "__version__",
]
