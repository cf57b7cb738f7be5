"""
Entry point for the application which fits a sparse precision matrix to one or more
expression CSV files sharing the gene axis.

Writes model.json (Theta, per view W, mu, sigma, k and the EM traces), edges.tsv with
weights Theta_ij, fit.log and manifest.json into the output folder. The multi view EM
additionally leaves a checkpoint/ folder that Checkpoint.load() restores.

Don't call directly. Use ./scripts/fit.sh or `mvtlasso fit`.

To see command line options, run ./scripts/fit.sh --help
"""
import os, sys, time, logging

from mvtlasso.core.errors import ValidationError
from mvtlasso.core.types import alignViews
from mvtlasso.dataset import read_expression_csv, edgeRecords, write_edges_tsv, write_json
from mvtlasso.models import fit
from mvtlasso.util import AppMode, Checkpoint

from apps.config import runApp, estimatorFor, tensorBoardHookFor, writeManifest

logger = logging.getLogger(__name__)

def inputPaths(inputArg):
    paths = [path.strip() for path in str(inputArg).split(",") if path.strip()]
    if not paths:
        raise ValidationError("--input names no files.")
    for path in paths:
        if not os.path.isfile(path):
            raise ValidationError("Input file {0} does not exist.".format(path))
    return paths

def loadViews(paths):
    views = [read_expression_csv(path) for path in paths]
    if len({view.view_id for view in views}) != len(views):
        views = [read_expression_csv(path, view_id="view{0}".format(d + 1)) for d, path in enumerate(paths)]
    return alignViews(views)

def modelDocument(method, lam, estimate, gene_ids, report=None, view_ids=()):
    document = {
        "method": method,
        "lambda": float(lam),
        "gene_ids": list(gene_ids),
        "Theta": estimate.Theta.tolist(),
        "edge_count": len(estimate.edges),
    }
    if report is not None:
        document["nu"] = float(report.model.nu)
        document["views"] = [
            {"view_id": view_id, "k": int(params.k), "sigma": float(params.sigma), "mu": params.mu.tolist(), "W": params.W.tolist()}
            for view_id, params in zip(view_ids, report.model.views)
        ]
        document["traces"] = {
            "q": [float(v) for v in report.q_trace],
            "q_gain": [float(v) for v in report.q_gain_trace],
            "loglik": [float(v) for v in report.loglik_trace],
            "w_success": [bool(v) for v in report.w_success],
            "converged": bool(report.converged),
            "iterations": int(report.iterations),
        }
    return document

def fitApp(appConfig):
    startTime = time.time()
    fitArgs = appConfig.fitArgs
    paths = inputPaths(appConfig.input)
    views = loadViews(paths)
    estimator = estimatorFor(fitArgs.method, fitArgs, threads=appConfig.threads)
    logger.info("Fitting {0} at lambda={1} on {2} views.".format(estimator, fitArgs.lam, len(views)))

    report = None
    if estimator.name == "mvtlasso":
        hook = tensorBoardHookFor(appConfig)
        try:
            report = fit(views, estimator.settings(fitArgs.lam, fitArgs.seed), hook=hook)
        finally:
            hook.close()
        estimate = report.estimate
        Checkpoint.fromReport(report, views).save(os.path.join(appConfig.runFolder, "checkpoint"))
    else:
        estimate = estimator.fit(views, fitArgs.lam, fitArgs.seed)

    genes = views[0].gene_ids
    outputs = [
        write_json(modelDocument(estimator.name, fitArgs.lam, estimate, genes, report, [v.view_id for v in views]),
                   os.path.join(appConfig.runFolder, "model.json")),
        write_edges_tsv(edgeRecords(estimate.edges, genes, estimate.Theta),
                        os.path.join(appConfig.runFolder, "edges.tsv")),
    ]
    writeManifest(appConfig, fitArgs.seed, startTime, inputs=paths, outputs=outputs)
    print("{0}: {1} edges written to {2}".format(estimator.name, len(estimate.edges), appConfig.runFolder))

def main(argv=None):
    return runApp(AppMode.Fit, fitApp, argv)

if __name__ == "__main__":
    sys.exit(main())
