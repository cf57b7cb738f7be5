from .stability import (StabilitySpec, StabilityResult, run, union_graph, count_against_truth, subsample,
            subsampleSizes)
