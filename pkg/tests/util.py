"""Helpers shared across test modules (package-coupled, unlike oracles)."""

import numpy as np
import yaml

import segray as sg


def write_obj(path, mesh):
    """Write a LabeledMesh's geometry as minimal OBJ text."""
    lines = [f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}"
             for v in mesh.vertices]
    lines += [f"f {a} {b} {c}" for a, b, c in mesh.faces + 1]
    path.write_text("\n".join(lines) + "\n")
    return path


def python_render(scene, grid, style, palette, cam, settings, frame=0):
    """Per-pixel render through the public per-op API only.

    Mirrors render_frame's defined pipeline: ray, intersections, segments,
    jittered samples, transfer, opacity correction, back-to-front composite.
    Requires a scene whose skin lies strictly inside the grid's node box so
    no box clipping is needed. Returns (image array, warning count).
    """
    w, h = cam.resolution
    start_inside = sg.point_inside_counts(scene, cam.position)
    dt0 = settings.resolve_dt0(grid)
    img = np.empty((h, w, 3), np.float64)
    warnings = 0
    evaluate = (sg.eval_interior if style.kind == sg.StyleKind.INTERIOR
                else sg.eval_fat_emphasized)
    for py in range(h):
        for px in range(w):
            origin, d = sg.generate_ray(cam, px, py)
            hits = sg.intersect_all(scene, origin, d)
            segs, nw = sg.build_segments(hits, scene, eps_t=scene.eps_t,
                                         start_inside=start_inside,
                                         t_start=scene.eps_t)
            warnings += nw
            stream = sg.PixelStream(settings.seed, frame, px, py)
            samples = sg.sample_ray(segs, settings, dt0, stream)
            shaded = []
            for t, dx, mat in samples:
                s = sg.sample_trilinear(grid, origin + t * d)
                color, a_eq = evaluate(mat, s, grid, style.params, palette)
                shaded.append((color, sg.correct_opacity(a_eq, dx, dt0)))
            img[py, px] = sg.composite_back_to_front(shaded,
                                                     settings.background)
    return img, warnings


def job_files(root, grid, meshes, job_extra=None, volume_name="vol.vgrid"):
    """Write a volume, mesh OBJs and a job YAML under root; return job path.

    meshes: list of LabeledMesh; material labels come from each mesh.
    job_extra: dict merged over the generated job mapping.
    """
    root.mkdir(parents=True, exist_ok=True)
    sg.write_volume(grid, str(root / volume_name))
    entries = []
    for i, mesh in enumerate(meshes):
        name = f"{mesh.name or 'mesh'}_{i}.obj"
        write_obj(root / name, mesh)
        entries.append({"path": name, "label": mesh.material.name.lower(),
                        "name": mesh.name})
    job = {
        "volume": volume_name,
        "meshes": entries,
        "output": "out_{frame}.ppm",
        "style": {"kind": "fat-emphasized"},
        "camera": {"view": "front", "resolution": [32, 24]},
        "sampling": {"seed": 11},
    }
    if job_extra:
        job.update(job_extra)
    path = root / "job.yaml"
    path.write_text(yaml.safe_dump(job))
    return path
