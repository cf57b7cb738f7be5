"""
Entry point for the application which runs stability selection of any estimator over a
penalty grid.

Writes pi_<index>.csv (selection probabilities) and selected_<index>.tsv per penalty,
union_edges.tsv, summary.json and manifest.json into the output folder. Penalty indices
follow the grid order listed in summary.json.

Don't call directly. Use ./scripts/stability.sh or `mvtlasso stability`.

To see command line options, run ./scripts/stability.sh --help
"""
import os, sys, time, logging

from mvtlasso.dataset import write_matrix_csv, edgeRecords, write_edges_tsv, write_json
from mvtlasso.stability import StabilitySpec, run, union_graph
from mvtlasso.util import AppMode

from apps.config import runApp, estimatorFor, writeManifest
from apps.fit import inputPaths, loadViews

logger = logging.getLogger(__name__)

def stabilityApp(appConfig):
    startTime = time.time()
    fitArgs, stabilityArgs = appConfig.fitArgs, appConfig.stabilityArgs
    paths = inputPaths(appConfig.input)
    views = loadViews(paths)
    # Replicates run in parallel, so every fit inside a replicate stays single threaded.
    estimator = estimatorFor(fitArgs.method, fitArgs, threads=1)
    spec = StabilitySpec(
        lambdas=stabilityArgs.lambdas,
        n_replicates=stabilityArgs.replicates,
        subsample_fraction=stabilityArgs.fraction,
        threshold=stabilityArgs.threshold,
        seed=fitArgs.seed,
        n_jobs=appConfig.threads,
        grid_count=stabilityArgs.grid_count,
        grid_ratio=stabilityArgs.grid_ratio,
    )
    results = run(views, estimator, spec)

    genes = views[0].gene_ids
    outputs = []
    summary = []
    for index, (lam, result) in enumerate(results.items()):
        outputs.append(write_matrix_csv(result.matrix.Pi, genes,
                                        os.path.join(appConfig.runFolder, "pi_{0:02d}.csv".format(index))))
        outputs.append(write_edges_tsv(edgeRecords(result.selected, genes, result.matrix.Pi),
                                       os.path.join(appConfig.runFolder, "selected_{0:02d}.tsv".format(index))))
        summary.append({
            "index": index,
            "lambda": float(lam),
            "selected": len(result.selected),
            "failures": int(result.failures),
            "valid": bool(result.valid),
        })
    outputs.append(write_edges_tsv(edgeRecords(union_graph(results), genes),
                                   os.path.join(appConfig.runFolder, "union_edges.tsv")))
    outputs.append(write_json({"method": estimator.name, "threshold": spec.threshold,
                               "replicates": spec.n_replicates, "fraction": spec.subsample_fraction,
                               "lambdas": summary},
                              os.path.join(appConfig.runFolder, "summary.json")))
    writeManifest(appConfig, fitArgs.seed, startTime, inputs=paths, outputs=outputs)
    print("{0}: stability selection over {1} penalties written to {2}".format(
        estimator.name, len(results), appConfig.runFolder))

def main(argv=None):
    return runApp(AppMode.Stability, stabilityApp, argv)

if __name__ == "__main__":
    sys.exit(main())
