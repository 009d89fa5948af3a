"""Command-line interface.

Subcommands: reconstruct, eval, gen-data, sweep, make-shape. Exit codes:
0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dsemesh", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("reconstruct", help="mesh a point cloud")
    rec.add_argument("input", help="point cloud (xyz, ply, obj)")
    rec.add_argument("output", help="mesh output (obj, ply)")
    rec.add_argument("--K", type=int, default=120)
    rec.add_argument("--k", type=int, default=30)
    rec.add_argument("--estimator", choices=["projection", "rotation", "neural"], default="projection")
    rec.add_argument("--neighborhood", choices=["heuristic", "neural"], default="heuristic")
    rec.add_argument("--classifier-weights")
    rec.add_argument("--projector-weights")
    rec.add_argument("--no-align", action="store_true")
    rec.add_argument("--no-select", action="store_true")
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--workers", type=int, default=1)
    rec.add_argument("--report", help="write report text/json/figure at this base path")
    rec.add_argument("--mark-nonmanifold", action="store_true")

    ev = sub.add_parser("eval", help="evaluate a mesh against a reference mesh")
    ev.add_argument("mesh")
    ev.add_argument("reference")
    ev.add_argument("--samples", type=int, default=100_000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--report", help="write report files at this base path")

    gen = sub.add_parser("gen-data", help="build a training patch dataset from a mesh")
    gen.add_argument("reference", help="reference mesh (obj, ply)")
    gen.add_argument("output", help="output .dsepatch path")
    gen.add_argument("--K", type=int, default=120)
    gen.add_argument("--k", type=int, default=30)
    gen.add_argument("--per-shape-patches", type=int, default=None)
    gen.add_argument("--seed", type=int, default=0)

    sw = sub.add_parser("sweep", help="grid-sweep k and K")
    sw.add_argument("input", help="point cloud")
    sw.add_argument("--grid", nargs="+", required=True, metavar="NAME=V1,V2,...",
                    help="e.g. --grid k=20,30,50 K=80,120,160")
    sw.add_argument("--estimator", choices=["projection", "rotation", "neural"], default="projection")
    sw.add_argument("--neighborhood", choices=["heuristic", "neural"], default="heuristic")
    sw.add_argument("--classifier-weights")
    sw.add_argument("--projector-weights")
    sw.add_argument("--reference", help="reference mesh enabling chamfer/normal metrics")
    sw.add_argument("--samples", type=int, default=50_000)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--out", default="sweep", help="output base path (.tsv/.png)")

    mk = sub.add_parser("make-shape", help="emit an analytic fixture mesh or cloud")
    mk.add_argument("kind", choices=[
        "lattice-disk", "icosphere", "cylinder", "torus", "rounded-cube", "sphere-cloud",
    ])
    mk.add_argument("output", help="mesh (obj/ply) or cloud (xyz) path")
    mk.add_argument("--size", type=float, default=1.0, help="radius or half-extent")
    mk.add_argument("--level", type=int, default=3, help="icosphere subdivision level")
    mk.add_argument("--n", type=int, default=2000, help="point count for cloud kinds")
    mk.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except BrokenPipeError:
        raise
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "reconstruct":
        return _cmd_reconstruct(args)
    if args.command == "eval":
        return _cmd_eval(args)
    if args.command == "gen-data":
        return _cmd_gen_data(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    if args.command == "make-shape":
        return _cmd_make_shape(args)
    raise AssertionError(f"unhandled command {args.command}")


def _load_weight_pair(args):
    from .formats import read_weights

    classifier = read_weights(args.classifier_weights) if args.classifier_weights else None
    projector = read_weights(args.projector_weights) if args.projector_weights else None
    return classifier, projector


def _config_from_args(args, k=None, K=None):
    from .pipeline import PipelineConfig

    return PipelineConfig(
        K=K if K is not None else args.K,
        k=k if k is not None else args.k,
        neighborhood=args.neighborhood,
        estimator=args.estimator,
        align=not getattr(args, "no_align", False),
        select=not getattr(args, "no_select", False),
        seed=args.seed,
        workers=getattr(args, "workers", 1),
    )


def _cmd_reconstruct(args) -> int:
    from .meshio import read_point_cloud, write_mesh
    from .pipeline import reconstruct

    cloud = read_point_cloud(args.input)
    config = _config_from_args(args)
    weights = _load_weight_pair(args)
    mesh, report, diag = reconstruct(cloud, config, weights=weights)
    write_mesh(args.output, mesh, mark_nonmanifold=args.mark_nonmanifold)
    print(
        f"reconstructed {mesh.n_triangles} triangles over {len(mesh.vertex_ids)} "
        f"of {len(cloud)} points; NW {report.nw_percent:.2f}%"
    )
    for stage, seconds in diag.timings.items():
        print(f"  {stage}: {seconds:.2f}s")
    if args.report:
        from .report import write_report

        paths = write_report(args.report, report, _echo(config, args.input, args.output))
        print("report: " + ", ".join(str(p) for p in paths))
    return 0


def _echo(config, *io_paths) -> dict:
    echo = {k: getattr(config, k) for k in (
        "K", "k", "neighborhood", "estimator", "align", "select", "seed", "workers",
    )}
    for i, p in enumerate(io_paths):
        echo[f"path{i}"] = str(p)
    return echo


def _cmd_eval(args) -> int:
    from .meshio import read_mesh
    from .metrics import evaluate_against_reference

    mesh = read_mesh(args.mesh)
    reference = read_mesh(args.reference)
    report = evaluate_against_reference(mesh, reference, samples=args.samples, seed=args.seed)
    print(f"NW          {report.nw_percent:.3f} %")
    print(f"CD          {report.chamfer:.6g}")
    print(f"NR          {report.normal_error_deg:.3f} deg")
    print(f"angle sigma {report.angle_stddev_deg:.3f} deg")
    if args.report:
        from .report import write_report

        echo = {"mesh": args.mesh, "reference": args.reference, "samples": args.samples, "seed": args.seed}
        write_report(args.report, report, echo)
    return 0


def _cmd_gen_data(args) -> int:
    from .datagen import generate_patch_dataset
    from .formats import write_patch_dataset
    from .meshio import read_mesh

    mesh = read_mesh(args.reference)
    dataset = generate_patch_dataset(
        mesh, K=args.K, k=args.k, count=args.per_shape_patches, seed=args.seed
    )
    write_patch_dataset(args.output, dataset)
    print(f"wrote {len(dataset)} records (K={dataset.K}, k={dataset.k}) to {args.output}")
    return 0


def _parse_grid(tokens) -> dict[str, list[int]]:
    grid = {}
    for token in tokens:
        if "=" not in token:
            raise ValueError(f"grid token {token!r} is not NAME=V1,V2,...")
        name, values = token.split("=", 1)
        name = name.strip()
        if name not in ("k", "K"):
            raise ValueError(f"unknown grid axis {name!r} (use k and K)")
        grid[name] = [int(v) for v in values.split(",") if v]
    return grid


def _cmd_sweep(args) -> int:
    from .meshio import read_mesh, read_point_cloud
    from .pipeline import sweep
    from .report import render_sweep_table, write_sweep

    cloud = read_point_cloud(args.input)
    grid = _parse_grid(args.grid)
    ks = grid.get("k", [30])
    Ks = grid.get("K", [120])
    configs = []
    for k in ks:
        for K in Ks:
            configs.append(_config_from_args(args, k=k, K=K))
    weights = _load_weight_pair(args)
    evaluate = None
    if args.reference:
        from .metrics import evaluate_against_reference

        reference = read_mesh(args.reference)

        def evaluate(mesh):
            rep = evaluate_against_reference(mesh, reference, samples=args.samples, seed=args.seed)
            return {"chamfer": rep.chamfer, "normal_error_deg": rep.normal_error_deg}

    rows = sweep(cloud, configs, weights=weights, evaluate=evaluate)
    print(render_sweep_table(rows), end="")
    paths = write_sweep(args.out, rows)
    print("sweep: " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_make_shape(args) -> int:
    from . import shapes
    from .meshio import write_mesh, write_point_cloud

    out = Path(args.output)
    if args.kind == "lattice-disk":
        obj = shapes.lattice_disk_mesh(args.size)
    elif args.kind == "icosphere":
        obj = shapes.icosphere(args.level, radius=args.size)
    elif args.kind == "cylinder":
        obj = shapes.cylinder_mesh(args.size, 2.0 * args.size, 48, 24)
    elif args.kind == "torus":
        obj = shapes.torus_mesh(args.size, 0.4 * args.size, 48, 24)
    elif args.kind == "rounded-cube":
        cloud = shapes.rounded_cube_cloud(args.n, half_extent=args.size, seed=args.seed)
        write_point_cloud(out, cloud)
        print(f"wrote {len(cloud)} points to {out}")
        return 0
    elif args.kind == "sphere-cloud":
        cloud = shapes.sphere_cloud(args.n, radius=args.size, seed=args.seed)
        write_point_cloud(out, cloud)
        print(f"wrote {len(cloud)} points to {out}")
        return 0
    else:
        raise AssertionError(args.kind)
    write_mesh(out, obj)
    print(f"wrote mesh with {obj.n_triangles} triangles to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
