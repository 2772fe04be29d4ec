"""
Script to compare greedy and beam search on random plies with square stay-outs
This script will:
1. Generate the random trials from one seed
2. Run greedy and beam search to failure on each
3. Write the per-trial CSV and save every divergence as a counterexample
"""

import os
import sys
import argparse

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from cli import run_bench

def main():
    parser = argparse.ArgumentParser(description="Greedy versus beam search benchmark.")
    parser.add_argument("--trials", type=int, default=200, help="Number of random trials.")
    parser.add_argument("--seed", type=int, default=0, help="Seed of the run.")
    parser.add_argument("--beam-width", type=int, default=10000, help="Beam width.")
    parser.add_argument("--out", default=str(config.CACHE_DIR / "bench.csv"), help="CSV file.")
    args = parser.parse_args()

    print(f"Running {args.trials} trials with beam width {args.beam_width}...")
    frame = run_bench(args.trials, args.seed, args.beam_width)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    frame.to_csv(args.out, index=False)
    print(f"Wrote {args.out}")

    diverged = frame[~frame["equal"]]
    print(f"Greedy equals beam in {frame['equal'].mean():.1%} of trials")
    if len(diverged):
        print(f"{len(diverged)} counterexamples saved to {config.COUNTEREXAMPLE_DIR}")

if __name__ == "__main__":
    main()
