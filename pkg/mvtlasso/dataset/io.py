"""
File formats.

Expression CSV: first column gene_id, header row of sample ids, one row per gene, values
written with 17 significant digits so that load(save(X)) == X.
Edge TSV: header gene_i, gene_j, weight; gene_i < gene_j lexicographically, rows sorted.
"""
import os, json, hashlib

import numpy as np
import pandas as pd

from ..core.errors import ValidationError
from ..core.types import ExpressionView

FLOAT_FORMAT = "%.17g"
EDGE_HEADER = ("gene_i", "gene_j", "weight")

def write_expression_csv(view, path):
    frame = pd.DataFrame(np.asarray(view.data), index=pd.Index(view.gene_ids, name="gene_id"),
                         columns=list(view.sample_ids))
    frame.to_csv(path, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    return path

def read_expression_csv(path, view_id=None):
    """
    Loads an expression CSV into an ExpressionView named after the file unless view_id is given.

    Raises:
        FileNotFoundError: path does not exist.
        ValidationError: malformed header or non-numeric values.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError("Expression file {0} does not exist.".format(path))
    try:
        frame = pd.read_csv(path, index_col=0, dtype={0: str}, float_precision="round_trip", encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise ValidationError("Cannot parse {0}: {1}".format(path, e))
    if frame.index.name != "gene_id":
        raise ValidationError("{0}: first column must be gene_id, got {1}.".format(path, frame.index.name))
    try:
        data = frame.to_numpy(dtype=float)
    except ValueError as e:
        raise ValidationError("{0}: non-numeric expression values ({1}).".format(path, e))
    if view_id is None:
        view_id = os.path.splitext(os.path.basename(path))[0]
    return ExpressionView(view_id, [str(g) for g in frame.index], [str(s) for s in frame.columns], data)

def write_matrix_csv(M, labels, path):
    frame = pd.DataFrame(np.asarray(M), index=pd.Index(list(labels), name="gene_id"), columns=list(labels))
    frame.to_csv(path, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    return path

def read_matrix_csv(path):
    """ Returns (matrix, labels). """
    frame = pd.read_csv(path, index_col=0, dtype={0: str}, float_precision="round_trip", encoding="utf-8")
    return frame.to_numpy(dtype=float), [str(g) for g in frame.index]

def edgeRecords(edges, gene_ids, weights=None):
    """
    Edge index pairs as sorted (gene_i, gene_j, weight) records with gene_i < gene_j.
    weights is a p x p matrix (Theta) or None for unit weights.
    """
    records = []
    for i, j in edges:
        weight = 1.0 if weights is None else float(weights[i, j])
        a, b = sorted((gene_ids[i], gene_ids[j]))
        records.append((a, b, weight))
    return sorted(records)

def write_edges_tsv(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fout:
        fout.write("\t".join(EDGE_HEADER) + "\n")
        for a, b, weight in sorted(records):
            fout.write("{0}\t{1}\t{2}\n".format(a, b, FLOAT_FORMAT % weight))
    return path

def read_edges_tsv(path):
    """
    Parses an edge TSV into (gene_i, gene_j, weight) records.

    Raises:
        FileNotFoundError: path does not exist.
        ValidationError: malformed line, reported with its 1-based line number.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fin:
        for lineNumber, line in enumerate(fin, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if lineNumber == 1 and tuple(fields) == EDGE_HEADER:
                continue
            if len(fields) not in (2, 3):
                raise ValidationError("{0}, line {1}: expected 'gene_i<TAB>gene_j<TAB>weight', got {2!r}.".format(
                    path, lineNumber, line))
            a, b = fields[0].strip(), fields[1].strip()
            if not a or not b:
                raise ValidationError("{0}, line {1}: empty gene id.".format(path, lineNumber))
            if a == b:
                raise ValidationError("{0}, line {1}: self loop on {2}.".format(path, lineNumber, a))
            try:
                weight = float(fields[2]) if len(fields) == 3 else 1.0
            except ValueError:
                raise ValidationError("{0}, line {1}: weight {2!r} is not a number.".format(
                    path, lineNumber, fields[2]))
            records.append((a, b, weight))
    return records

def edgePairs(records):
    """ Unordered gene pairs of edge records. """
    return frozenset(tuple(sorted((a, b))) for a, b, _ in records)

def file_digest(path):
    sha = hashlib.sha256()
    with open(path, "rb") as fin:
        for chunk in iter(lambda: fin.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()

def write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fout:
        json.dump(obj, fout, indent=2, sort_keys=False)
        fout.write("\n")
    return path

def read_json(path):
    with open(path, "r", encoding="utf-8") as fin:
        return json.load(fin)
