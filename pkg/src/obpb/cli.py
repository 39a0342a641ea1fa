"""Command line front end: run, compare and validate scenarios.

Exit codes: 0 success, 1 configuration or input error, 2 scenario ran but at
least one optimizer point did not converge (artifacts are still written).
"""

import argparse
import sys

from .scenario import (ScenarioError, compare_manifests, load_scenario,
                       render_comparison_csv, run_scenario)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="obpb",
        description="Beam pattern optimization scenarios: proposed "
                    "spherical-mode beams with surface projection vs. "
                    "DFT-codebook baselines.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file and write "
                                       "its artifact tree")
    p_run.add_argument("config", help="scenario YAML file")
    p_run.add_argument("--quiet", action="store_true",
                       help="suppress progress lines")

    p_cmp = sub.add_parser("compare", help="align two or more run manifests "
                                           "into one comparison CSV")
    p_cmp.add_argument("manifests", nargs="+", help="manifest.json paths")
    p_cmp.add_argument("--baseline", default=None,
                       help="method label the capacity ratios divide by "
                            "(default: first method of the first manifest)")
    p_cmp.add_argument("--out", default=None,
                       help="write the CSV here instead of stdout")

    p_val = sub.add_parser("validate", help="parse and validate a scenario "
                                            "file without running it")
    p_val.add_argument("config", help="scenario YAML file")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "validate":
            scenario = load_scenario(args.config)
            print(f"{args.config}: ok ({len(scenario.methods)} methods x "
                  f"{len(scenario.n_ue)} N_UE points -> "
                  f"{scenario.resolved_output_dir()})")
            return 0
        if args.verb == "run":
            echo = (lambda msg: None) if args.quiet else \
                (lambda msg: print(msg, flush=True))
            outcome = run_scenario(load_scenario(args.config), echo=echo)
            print(f"wrote {outcome.manifest_path}")
            if outcome.exit_code == 2:
                print("warning: at least one optimizer run did not converge "
                      "(converged=false in the manifest)", file=sys.stderr)
            return outcome.exit_code
        header, rows = compare_manifests(args.manifests,
                                         baseline=args.baseline)
        text = render_comparison_csv(header, rows)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            print(f"wrote {args.out}")
        else:
            sys.stdout.write(text)
        return 0
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
