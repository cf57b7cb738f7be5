"""
Entry point for the application which generates a synthetic multi view data set with a
known sparse precision matrix.

Writes view<d>.csv per view, truth_edges.tsv, truth_theta.csv and manifest.json into the
output folder.

Don't call directly. Use ./scripts/simulate.sh or `mvtlasso simulate`.

To see command line options, run ./scripts/simulate.sh --help
"""
import os, sys, time, logging

from mvtlasso.dataset import (SynthSpec, generate, geneIds, write_expression_csv, write_matrix_csv,
            edgeRecords, write_edges_tsv)
from mvtlasso.util import AppMode

from apps.config import runApp, writeManifest

logger = logging.getLogger(__name__)

def synthSpecFrom(synthArgs, seed=None):
    return SynthSpec.fromSamples(
        synthArgs.p, synthArgs.n, synthArgs.k,
        D=synthArgs.views,
        nu=synthArgs.nu,
        edge_prob=synthArgs.edge_prob,
        sigma=synthArgs.sigma,
        seed=synthArgs.seed if seed is None else seed,
    )

def simulate(appConfig):
    startTime = time.time()
    spec = synthSpecFrom(appConfig.synthArgs)
    views, truth = generate(spec)
    logger.info("Generated {0} views of {1} genes x {2} samples with {3} true edges.".format(
        spec.D, spec.p, spec.n, len(truth.edges)))

    outputs = []
    for view in views:
        outputs.append(write_expression_csv(view, os.path.join(appConfig.runFolder, view.view_id + ".csv")))
    genes = geneIds(spec.p)
    outputs.append(write_edges_tsv(edgeRecords(truth.edges, genes, truth.Theta),
                                   os.path.join(appConfig.runFolder, "truth_edges.tsv")))
    outputs.append(write_matrix_csv(truth.Theta, genes, os.path.join(appConfig.runFolder, "truth_theta.csv")))
    writeManifest(appConfig, spec.seed, startTime, outputs=outputs)
    print("Wrote {0} views to {1}".format(spec.D, appConfig.runFolder))

def main(argv=None):
    return runApp(AppMode.Simulate, simulate, argv)

if __name__ == "__main__":
    sys.exit(main())
