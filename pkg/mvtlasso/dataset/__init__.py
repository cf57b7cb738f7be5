from .synth import SynthSpec, SynthTruth, gen_theta, gen_views, generate, geneIds, sampleIds
from .io import (write_expression_csv, read_expression_csv, write_matrix_csv, read_matrix_csv,
            edgeRecords, write_edges_tsv, read_edges_tsv, edgePairs, file_digest, write_json, read_json)
