"""
Entry point for the application which compares an estimated edge list with a ground truth
edge list and prints the confusion counts as JSON.

Don't call directly. Use ./scripts/evaluate.sh or `mvtlasso eval`.

To see command line options, run ./scripts/evaluate.sh --help
"""
import os, sys, json

from mvtlasso.dataset import read_edges_tsv, edgePairs, write_json
from mvtlasso.evaluator import confusion
from mvtlasso.util import AppMode

from apps.config import runApp

def evaluateApp(appConfig):
    estimated = edgePairs(read_edges_tsv(appConfig.edges))
    truth = edgePairs(read_edges_tsv(appConfig.truth))
    counts = confusion(estimated, truth, appConfig.p).asDict()
    if appConfig.runFolder is not None:
        write_json(counts, os.path.join(appConfig.runFolder, "confusion.json"))
    print(json.dumps(counts, indent=2))

def main(argv=None):
    return runApp(AppMode.Evaluate, evaluateApp, argv)

if __name__ == "__main__":
    sys.exit(main())
