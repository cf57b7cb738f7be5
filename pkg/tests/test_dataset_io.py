import os
import shutil
import tempfile
import unittest

import numpy as np

from mvtlasso.core import ExpressionView, ValidationError
from mvtlasso.dataset import (write_expression_csv, read_expression_csv, write_matrix_csv, read_matrix_csv,
                              edgeRecords, write_edges_tsv, read_edges_tsv, edgePairs, file_digest,
                              write_json, read_json)


class TestIo(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.folder)

    def path(self, name):
        return os.path.join(self.folder, name)

    def test_expression_round_trip(self):
        data = np.random.default_rng(0).standard_normal((5, 3)) * 1e3
        view = ExpressionView("view1", ["g1", "g2", "g3", "g4", "g5"], ["a", "b", "c"], data)
        write_expression_csv(view, self.path("view1.csv"))
        loaded = read_expression_csv(self.path("view1.csv"))
        np.testing.assert_array_equal(loaded.data, data)
        self.assertEqual(loaded.gene_ids, view.gene_ids)
        self.assertEqual(loaded.sample_ids, view.sample_ids)
        self.assertEqual(loaded.view_id, "view1")

    def test_expression_view_id_override(self):
        view = ExpressionView.fromMatrix(np.eye(2), view_id="x")
        write_expression_csv(view, self.path("x.csv"))
        self.assertEqual(read_expression_csv(self.path("x.csv"), view_id="tumor").view_id, "tumor")

    def test_expression_missing_file(self):
        self.assertRaises(FileNotFoundError, lambda: read_expression_csv(self.path("nope.csv")))

    def test_expression_bad_header(self):
        with open(self.path("bad.csv"), "w") as fout:
            fout.write("gene,a,b\ng1,1,2\ng2,3,4\n")
        self.assertRaises(ValidationError, lambda: read_expression_csv(self.path("bad.csv")))

    def test_expression_non_numeric(self):
        with open(self.path("bad.csv"), "w") as fout:
            fout.write("gene_id,a,b\ng1,1,x\ng2,3,4\n")
        self.assertRaises(ValidationError, lambda: read_expression_csv(self.path("bad.csv")))

    def test_matrix_round_trip(self):
        M = np.array([[1.5, -0.25], [-0.25, 2.0]])
        write_matrix_csv(M, ["g1", "g2"], self.path("theta.csv"))
        loaded, labels = read_matrix_csv(self.path("theta.csv"))
        np.testing.assert_array_equal(loaded, M)
        self.assertEqual(labels, ["g1", "g2"])

    def test_edge_records_are_sorted(self):
        records = edgeRecords({(2, 0), (0, 1)}, ["gb", "ga", "gc"], weights=np.arange(9.0).reshape(3, 3))
        self.assertEqual(records, [("ga", "gb", 1.0), ("gb", "gc", 6.0)])

    def test_edges_round_trip(self):
        records = [("g1", "g2", 0.5), ("g1", "g3", -1.0)]
        write_edges_tsv(records, self.path("edges.tsv"))
        self.assertEqual(read_edges_tsv(self.path("edges.tsv")), records)
        self.assertEqual(edgePairs(records), frozenset({("g1", "g2"), ("g1", "g3")}))

    def test_edges_without_weight(self):
        with open(self.path("edges.tsv"), "w") as fout:
            fout.write("g2\tg1\n")
        self.assertEqual(read_edges_tsv(self.path("edges.tsv")), [("g2", "g1", 1.0)])
        self.assertEqual(edgePairs(read_edges_tsv(self.path("edges.tsv"))), frozenset({("g1", "g2")}))

    def test_malformed_edge_line(self):
        with open(self.path("edges.tsv"), "w") as fout:
            fout.write("gene_i\tgene_j\tweight\ng1 g2 0.5\n")
        with self.assertRaises(ValidationError) as context:
            read_edges_tsv(self.path("edges.tsv"))
        self.assertIn("line 2", str(context.exception))

    def test_self_loop_rejected(self):
        with open(self.path("edges.tsv"), "w") as fout:
            fout.write("g1\tg1\t1.0\n")
        self.assertRaises(ValidationError, lambda: read_edges_tsv(self.path("edges.tsv")))

    def test_bad_weight(self):
        with open(self.path("edges.tsv"), "w") as fout:
            fout.write("g1\tg2\theavy\n")
        self.assertRaises(ValidationError, lambda: read_edges_tsv(self.path("edges.tsv")))

    def test_digest_and_json(self):
        write_json({"seed": 7, "values": [1, 2]}, self.path("a.json"))
        write_json({"seed": 7, "values": [1, 2]}, self.path("b.json"))
        self.assertEqual(read_json(self.path("a.json")), {"seed": 7, "values": [1, 2]})
        self.assertEqual(file_digest(self.path("a.json")), file_digest(self.path("b.json")))
        self.assertEqual(len(file_digest(self.path("a.json"))), 64)
