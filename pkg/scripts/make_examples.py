"""
Script to write the example project files
This script will:
1. Build the wing-like layup (24 plies at 0/60/120 degrees)
2. Build the vehicle-panel layup (24 plies in perpendicular pairs, two stay-outs)
3. Save both as project JSON files with the cost parameters of the sweep example
"""

import os
import sys
import argparse

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from model import CostParams
from project_io import Project, save_project
from synthetic import vehicle_layup, wing_layup

def main():
    parser = argparse.ArgumentParser(description="Write the example project files.")
    parser.add_argument("--out-dir", default="examples_out", help="Directory for the project files.")
    args = parser.parse_args()

    cost_params = CostParams(a_mat=5.0, b_mat=1.0, c_seam=0.01, spool_min=0.1, spool_max=0.6)
    for name, build in (("wing", wing_layup), ("vehicle", vehicle_layup)):
        plies, zones, manufacturing = build()
        project = Project(plies, zones, manufacturing, cost_params, sort_by_orientation=True)
        path = os.path.join(args.out_dir, f"{name}.json")
        save_project(project, path)
        print(f"Wrote {path} ({len(plies)} plies, {len(zones)} stay-outs)")

if __name__ == "__main__":
    main()
