"""Multi-threaded ray casting of segmented scalar volumes.

Scalar samples get materials by exact ray-mesh intersection (highest
priority among enclosing organ meshes, fat inside skin otherwise), a
per-material transfer function turns each sample into colour and opacity,
and pixels composite back to front with jittered, opacity-corrected
sampling. Rendering is deterministic for a fixed seed regardless of
thread count.
"""

from .errors import ConfigError, ParseError
from .geometry import (OUTSIDE, Hit, LabeledMesh, Material, Scene, Segment,
                       assign_material, build_scene, build_segments,
                       classify_nodes, intersect_all, point_inside_counts)
from .io import (MeshSpec, RenderJob, parse_job, ppm_bytes, read_histogram,
                 read_mesh, read_volume, substitute_frame, write_histogram,
                 write_image, write_volume)
from .raycast import (Camera, FrameBuffer, PixelStream, RaySample,
                      SampleSettings, camera_basis, camera_preset,
                      composite_back_to_front, correct_opacity, generate_ray,
                      render_frame, sample_ray)
from .shapes import make_box, make_icosphere, make_tilted_slab
from .transfer import (MaterialPalette, Style, StyleKind, StyleParams,
                       eval_fat_emphasized, eval_interior)
from .volume import (Histogram, VolumeGrid, bin_index, region_histogram,
                     sample_trilinear)

__version__ = "0.1.0"

__all__ = [
    "Camera", "ConfigError", "FrameBuffer", "Histogram", "Hit",
    "LabeledMesh", "Material", "MaterialPalette", "MeshSpec", "OUTSIDE",
    "ParseError", "PixelStream", "RaySample", "RenderJob", "SampleSettings",
    "Scene", "Segment", "Style", "StyleKind", "StyleParams", "VolumeGrid",
    "assign_material", "bin_index", "build_scene", "build_segments",
    "camera_basis", "camera_preset", "classify_nodes",
    "composite_back_to_front", "correct_opacity", "eval_fat_emphasized",
    "eval_interior", "generate_ray", "intersect_all", "make_box",
    "make_icosphere", "make_tilted_slab", "parse_job",
    "point_inside_counts", "ppm_bytes", "read_histogram", "read_mesh",
    "read_volume", "region_histogram", "render_frame", "sample_ray",
    "sample_trilinear", "substitute_frame", "write_histogram",
    "write_image", "write_volume",
]
