from .camera import Camera, generate_ray
from .image import Image, image_diff, read_image, write_image
from .march import level_box, render_image, shade_points_compiled, shade_sample
from .transfer import MASK_MODES, RenderSettings, ShaderConfig, TransferFunction

__all__ = [
    "Camera",
    "Image",
    "MASK_MODES",
    "RenderSettings",
    "ShaderConfig",
    "TransferFunction",
    "generate_ray",
    "image_diff",
    "level_box",
    "read_image",
    "render_image",
    "shade_points_compiled",
    "shade_sample",
    "write_image",
]
