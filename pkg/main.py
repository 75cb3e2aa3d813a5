"""
Main Script - Hybrid Cloud Orchestrator

Schedules batches of multi-stage jobs across a private cluster and a
pay-per-use public cloud, so the batch finishes by a deadline at the
lowest public cost.

How to use:
    python main.py generate --template video --jobs 20 --trace-jobs 200
    python main.py train --dag data/dag.txt --trace data/trace.csv
    python main.py simulate --dag data/dag.txt --workload data/workload.csv \
        --truth data/truth.csv --policy spt --cmax 60000
    python main.py solve --dag data/dag.txt --workload data/workload.csv --cmax 60000
    python main.py verify --dag data/dag.txt --workload data/workload.csv \
        --schedule data/schedule.csv --cmax 60000
    python main.py sweep --dag data/dag.txt --workload data/workload.csv \
        --cmax 20000,40000,60000 --policies spt,hcf,all-public
    python main.py compare --dag data/dag.txt --workload data/workload.csv --cmax 60000

Run `python main.py <command> --help` for every flag.
"""

import sys

from src.cli.commands import main


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
