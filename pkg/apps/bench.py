"""
Entry point for the application which benchmarks estimators on synthetic data: ROC curves
over a penalty grid, averaged over generation seeds.

Writes roc_<method>.tsv (lambda, fpr, tpr), summary.json (AUC per method) and
manifest.json into the output folder. No images; the tables are plot ready.

Don't call directly. Use ./scripts/bench.sh or `mvtlasso bench`.

To see command line options, run ./scripts/bench.sh --help
"""
import os, sys, time, logging

from mvtlasso.core.errors import ValidationError
from mvtlasso.dataset import write_json
from mvtlasso.evaluator import compare_methods
from mvtlasso.util import AppMode

from apps.config import runApp, estimatorFor, writeManifest
from apps.simulate import synthSpecFrom

logger = logging.getLogger(__name__)

ROC_HEADER = ("lambda", "fpr", "tpr")

def write_roc_tsv(curve, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fout:
        fout.write("\t".join(ROC_HEADER) + "\n")
        for lam, (fpr, tpr) in zip(curve.lambdas, curve.points):
            fout.write("{0!r}\t{1!r}\t{2!r}\n".format(float(lam), float(fpr), float(tpr)))
    return path

def benchApp(appConfig):
    startTime = time.time()
    synthArgs, fitArgs, benchArgs = appConfig.synthArgs, appConfig.fitArgs, appConfig.benchArgs
    methods = [method.strip() for method in str(benchArgs.methods).split(",") if method.strip()]
    if not methods:
        raise ValidationError("--methods names no estimator.")
    if benchArgs.seeds < 1:
        raise ValidationError("--seeds must be >= 1, got {0}.".format(benchArgs.seeds))
    estimators = [estimatorFor(method, fitArgs, threads=1, nu=synthArgs.nu) for method in methods]
    spec = synthSpecFrom(synthArgs, seed=benchArgs.first_seed)
    seeds = range(benchArgs.first_seed, benchArgs.first_seed + benchArgs.seeds)

    curves = compare_methods(spec, estimators, benchArgs.lambdas, seeds, count=benchArgs.grid_count,
                             ratio=benchArgs.grid_ratio, n_jobs=appConfig.threads)

    outputs = []
    summary = []
    for curve in curves:
        outputs.append(write_roc_tsv(curve, os.path.join(appConfig.runFolder, "roc_{0}.tsv".format(curve.method))))
        summary.append({
            "method": curve.method,
            "auc": float(curve.auc),
            "n_seeds": int(curve.n_seeds),
            "dropped": int(curve.dropped),
            "valid": bool(curve.valid),
        })
    ordering = [entry["method"] for entry in sorted(summary, key=lambda entry: -entry["auc"])]
    outputs.append(write_json({"methods": summary, "auc_ordering": ordering},
                              os.path.join(appConfig.runFolder, "summary.json")))
    writeManifest(appConfig, benchArgs.first_seed, startTime, outputs=outputs)
    for entry in summary:
        print("{0:<12} AUC {1:.4f} over {2} seeds".format(entry["method"], entry["auc"], entry["n_seeds"]))

def main(argv=None):
    return runApp(AppMode.Bench, benchApp, argv)

if __name__ == "__main__":
    sys.exit(main())
