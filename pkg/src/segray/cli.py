"""Command line front end: render, histogram, validate.

Exit codes: 0 success, 1 validation/config error, 2 runtime failure.
Every successful command ends with one tab-separated stats line:

    stats\tframes=N\tsec_per_frame=S\tpeak_mb=M\tparity_warnings=W\t...

plus style/view/threads/seed fields naming the effective values after flag
overrides.
"""

import argparse
import dataclasses
import os
import resource
import sys
import time

import numba
import numpy as np

from .errors import ConfigError, ParseError
from .geometry import Material, build_scene, classify_nodes, intersect_all
from .io import (parse_job, read_histogram, read_mesh, read_volume,
                 substitute_frame, write_histogram, write_image)
from .raycast import SampleSettings, camera_preset, render_frame
from .transfer import Style, StyleKind, StyleParams
from .volume import region_histogram


@dataclasses.dataclass
class CommandOutcome:
    exit_code: int
    report: str
    stats: dict

    def stats_line(self):
        parts = ["stats"]
        for k, v in self.stats.items():
            if isinstance(v, float):
                v = f"{v:.3f}"
            parts.append(f"{k}={v}")
        return "\t".join(parts)


def _peak_mb():
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def set_threads(n):
    """Clamp to numba's worker limit; determinism never depends on this."""
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def apply_overrides(job, overrides):
    """A new RenderJob with CLI flag overrides folded in.

    Writing the same values in the job file is equivalent by construction:
    overrides replace fields before any work happens.
    """
    job = dataclasses.replace(job)
    if overrides.get("style") is not None:
        kind = StyleKind.parse(overrides["style"])
        job.style = Style(kind, job.style.params)
    if overrides.get("view") is not None:
        v = overrides["view"]
        if v not in ("front", "back", "side"):
            raise ConfigError(f"--view must be front, back or side, got {v!r}")
        job.view = v
        job.camera = None
    if overrides.get("seed") is not None or overrides.get("dt0") is not None:
        s = job.settings
        job.settings = SampleSettings(
            dt0=overrides.get("dt0", s.dt0) if overrides.get("dt0") is not None else s.dt0,
            jitter=s.jitter,
            seed=overrides["seed"] if overrides.get("seed") is not None else s.seed,
            background=s.background)
    if overrides.get("gamma"):
        job.gamma = True
    if overrides.get("output") is not None:
        job.output = overrides["output"]
    if overrides.get("frame") is not None:
        job.frames = (overrides["frame"], overrides["frame"])
    if overrides.get("frames") is not None:
        job.frames = overrides["frames"]
        if job.frames[1] > job.frames[0] and "{frame" not in job.output:
            raise ConfigError("multi-frame jobs need a {frame} placeholder "
                              "in the output path")
    return job


def _resolve(job, path):
    return path if os.path.isabs(path) else os.path.join(job.base_dir, path)


def load_frame_inputs(job, frame):
    """(grid, scene) for one frame, with {frame} substituted into paths."""
    grid = read_volume(_resolve(job, substitute_frame(job.volume, frame)))
    meshes = [read_mesh(_resolve(job, substitute_frame(m.path, frame)),
                        m.label, m.name) for m in job.meshes]
    return grid, build_scene(meshes)


def fat_histogram(job, grid, scene):
    """The fat-region histogram for a frame: cached file or recomputed."""
    if job.histogram_path is not None:
        return read_histogram(_resolve(job, job.histogram_path))
    labels = classify_nodes(scene, grid)
    return region_histogram(grid, labels, Material.FAT, job.bins)


def render_job_frame(job, frame):
    """Render one frame of a job. Returns (FrameBuffer, warnings)."""
    grid, scene = load_frame_inputs(job, frame)
    style = job.style
    if style.kind == StyleKind.INTERIOR:
        style = style.with_hist(fat_histogram(job, grid, scene))
    cam = job.camera
    if cam is None:
        cam = camera_preset(job.view or "front", grid, job.vfov,
                            job.resolution)
    return render_frame(scene, grid, style, job.palette, cam, job.settings,
                        frame_index=frame)


def cmd_render(job_path, overrides=None):
    job = apply_overrides(parse_job(job_path), overrides or {})
    lines = []
    total_warn = 0
    times = []
    for frame in job.frame_range():
        t0 = time.perf_counter()
        fb, warn = render_job_frame(job, frame)
        out = _resolve(job, substitute_frame(job.output, frame))
        os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
        write_image(fb, out, gamma=job.gamma)
        dt = time.perf_counter() - t0
        times.append(dt)
        total_warn += warn
        lines.append(f"frame {frame}: wrote {out} ({dt:.3f} s, "
                     f"parity warnings {warn})")
    stats = {
        "frames": len(times),
        "sec_per_frame": sum(times) / len(times),
        "peak_mb": _peak_mb(),
        "parity_warnings": total_warn,
        "style": job.style.kind.value,
        "view": job.view or "explicit",
        "threads": numba.get_num_threads(),
        "seed": job.settings.seed,
    }
    return CommandOutcome(0, "\n".join(lines), stats)


def cmd_histogram(job_path, out_path, overrides=None):
    job = apply_overrides(parse_job(job_path), overrides or {})
    frame = job.frames[0]
    t0 = time.perf_counter()
    grid, scene = load_frame_inputs(job, frame)
    labels = classify_nodes(scene, grid)
    hist = region_histogram(grid, labels, Material.FAT, job.bins)
    write_histogram(hist, out_path)
    dt = time.perf_counter() - t0
    fat_nodes = int(hist.counts.sum())
    report = (f"frame {frame}: fat histogram over {hist.bin_count} bins, "
              f"range 0..{hist.hi}\n"
              f"fat nodes {fat_nodes}, rho_max {hist.rho_max}, "
              f"modal bin {hist.modal_bin}\n"
              f"wrote {out_path}")
    if fat_nodes == 0:
        report = "warning: no fat-labeled nodes; histogram is all zeros\n" + report
    stats = {
        "frames": 1,
        "sec_per_frame": dt,
        "peak_mb": _peak_mb(),
        "parity_warnings": 0,
        "rho_max": hist.rho_max,
        "modal_bin": hist.modal_bin,
        "threads": numba.get_num_threads(),
        "seed": job.settings.seed,
    }
    return CommandOutcome(0, report, stats)


def parity_rate(scene, mesh_index, n_rays, rng):
    """Fraction of random exterior rays with odd crossings of one mesh.

    Rays start outside the whole scene and aim at random points inside the
    mesh's bounding box, so closed meshes score 0 and holes show up.
    """
    mesh = scene.meshes[mesh_index]
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    centre = (scene.bounds_lo + scene.bounds_hi) * 0.5
    radius = scene.diameter() * 0.75 + 1.0
    odd = 0
    for _ in range(n_rays):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        origin = centre + d * radius
        target = lo + rng.random(3) * (hi - lo)
        direction = target - origin
        crossings = sum(1 for h in intersect_all(scene, origin, direction)
                        if h.mesh == mesh_index)
        odd += crossings % 2
    return odd / n_rays


def cmd_validate(job_path, n_rays=200, overrides=None):
    job = apply_overrides(parse_job(job_path), overrides or {})
    frame = job.frames[0]
    t0 = time.perf_counter()
    grid, scene = load_frame_inputs(job, frame)
    rng = np.random.default_rng(job.settings.seed)
    rows = [("mesh", "label", "vertices", "triangles", "dropped",
             "odd_parity")]
    for i, mesh in enumerate(scene.meshes):
        rate = parity_rate(scene, i, n_rays, rng)
        rows.append((mesh.name, mesh.material.name.lower(),
                     str(len(mesh.vertices)), str(len(mesh.faces)),
                     str(mesh.degenerate_dropped), f"{rate:.3f}"))
    rows.append(("total", "-",
                 str(sum(len(m.vertices) for m in scene.meshes)),
                 str(scene.n_triangles),
                 str(sum(m.degenerate_dropped for m in scene.meshes)), "-"))
    widths = [max(len(r[c]) for r in rows) for c in range(6)]
    table = "\n".join("  ".join(f"{r[c]:<{widths[c]}}" for c in range(6))
                      for r in rows)
    nx, ny, nz = grid.dims
    report = (f"volume: {nx}x{ny}x{nz} nodes, spacing "
              f"{grid.spacing.tolist()} mm, s_max {grid.s_max}\n"
              f"rays per mesh: {n_rays}\n{table}")
    dt = time.perf_counter() - t0
    stats = {
        "frames": 1,
        "sec_per_frame": dt,
        "peak_mb": _peak_mb(),
        "parity_warnings": 0,
        "meshes": scene.n_meshes,
        "triangles": scene.n_triangles,
        "threads": numba.get_num_threads(),
        "seed": job.settings.seed,
    }
    return CommandOutcome(0, report, stats)


def _parse_frames(text):
    a, sep, b = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("expected A..B")
    try:
        lo, hi = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError("expected integers A..B") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("frame range is reversed")
    return (lo, hi)


def build_parser():
    p = argparse.ArgumentParser(
        prog="segray",
        description="Ray-cast segmented scalar volumes with per-material "
                    "transfer functions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, output=True):
        sp.add_argument("--job", required=True, help="YAML job file")
        sp.add_argument("--frame", type=int, help="render a single frame")
        sp.add_argument("--frames", type=_parse_frames, metavar="A..B",
                        help="inclusive frame range")
        sp.add_argument("--style",
                        choices=["interior", "interior-emphasized", "fat",
                                 "fat-emphasized"])
        sp.add_argument("--view", choices=["front", "back", "side"])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--dt0", type=float)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--gamma", action="store_true",
                        help="gamma 2.2 on output (default off)")
        if output:
            sp.add_argument("--output", help="override the output path")

    sp = sub.add_parser("render", help="render the job's frame range")
    common(sp)
    sp = sub.add_parser("histogram", help="write the fat-region histogram "
                                          "cache for one frame")
    common(sp)
    sp.add_argument("--out", required=True, help="histogram cache file")
    sp = sub.add_parser("validate", help="check meshes and report parity "
                                         "statistics")
    common(sp, output=False)
    sp.add_argument("--rays", type=int, default=200,
                    help="exterior parity rays per mesh")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        set_threads(args.threads)
    overrides = {
        "frame": args.frame,
        "frames": args.frames,
        "style": args.style,
        "view": args.view,
        "seed": args.seed,
        "dt0": args.dt0,
        "gamma": args.gamma,
        "output": getattr(args, "output", None),
    }
    try:
        if args.command == "render":
            outcome = cmd_render(args.job, overrides)
        elif args.command == "histogram":
            outcome = cmd_histogram(args.job, args.out, overrides)
        else:
            outcome = cmd_validate(args.job, args.rays, overrides)
    except (ConfigError, ParseError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - runtime failures exit 2
        print(f"failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    if outcome.report:
        print(outcome.report)
    print(outcome.stats_line())
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
