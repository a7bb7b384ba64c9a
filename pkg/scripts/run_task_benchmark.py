"""Task-success benchmark with and without last-inch correction, for each scripted demo.

    python scripts/run_task_benchmark.py --poses 20 --demos insert twist_insert scoop hammer
"""

import argparse
import math
from dataclasses import replace

from coarse2fine.harness.config import DEMO_KINDS, ExperimentConfig, load_config
from coarse2fine.harness.experiments import demo_for_config, run_task_benchmark, scene_for_demo, train_models
from coarse2fine.harness.report import aggregate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config")
    parser.add_argument("--objects", type=int, default=5)
    parser.add_argument("--poses", type=int, default=20)
    parser.add_argument("--demos", nargs="+", default=list(DEMO_KINDS), choices=DEMO_KINDS)
    parser.add_argument("--pos-tol-mm", type=float, help="override the position tolerance")
    args = parser.parse_args()

    base = load_config(args.config) if args.config else ExperimentConfig()
    base = replace(base, n_objects=args.objects, n_poses_per_object=args.poses, task_correction="both")
    if args.pos_tol_mm is not None:
        base = replace(base, success_pos_tol=args.pos_tol_mm / 1000)

    print(f"tolerance {base.success_pos_tol * 1000:.1f} mm / {math.degrees(base.success_yaw_tol):.1f} deg, "
          f"{args.objects * args.poses} trials per cell")
    for kind in args.demos:
        cfg = replace(base, demo=kind)
        demo = demo_for_config(cfg)
        models = train_models(cfg, scene_for_demo(cfg.scene, demo))
        records = run_task_benchmark(cfg, demo, models)
        table = aggregate(records)
        print(f"\n[{kind}]")
        for m in table.methods():
            ok = [bool(r.success) for r in records if r.method == m]
            print(f"  {m:<32} success {100 * sum(ok) / len(ok):5.1f}%   "
                  f"mean pos {table[m].pos_mean:6.2f} mm   mean ori {table[m].ori_mean:5.2f} deg")


if __name__ == "__main__":
    main()
