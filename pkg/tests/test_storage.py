"""File formats: binary embeddings, JSON mixture models, binary student
models, escaped TSV."""

import json
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spheremix.distill import FeaturizerSpec, StudentModel
from spheremix.errors import (
    BadMagicError,
    NormFlagViolationError,
    SizeMismatchError,
    TruncatedPayloadError,
)
from spheremix.geometry import normalize
from spheremix.inference import FitConfig
from spheremix.objective import MixtureParams
from spheremix.storage import (
    config_echo,
    escape_field,
    load_model,
    load_student,
    read_dataset_tsv,
    read_embeddings,
    read_labels,
    read_texts,
    save_model,
    save_student,
    unescape_field,
    write_dataset_tsv,
    write_embeddings,
    write_labels,
    write_texts,
)

NASTY = ["plain", "tab\there", "new\nline", "back\\slash", "cr\rhere",
         "\\t literal", "", "mix\t\n\\\r end", "unicode é中"]


class TestEmbeddings:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((17, 5)).astype(np.float32)
        path = tmp_path / "emb.bin"
        write_embeddings(X, path)
        back = read_embeddings(path)
        assert back.dtype == np.float64
        np.testing.assert_array_equal(back, X.astype(np.float64))

    def test_unit_rows_set_flag(self, tmp_path):
        rng = np.random.default_rng(1)
        X = normalize(rng.standard_normal((8, 6))).astype(np.float32)
        # renormalize in f32 so rows stay unit after the cast
        X = (X / np.linalg.norm(X.astype(np.float64), axis=1, keepdims=True)).astype(np.float32)
        path = tmp_path / "emb.bin"
        write_embeddings(X, path)
        blob = path.read_bytes()
        flag = struct.unpack_from("<IQIB", blob, 7)[3]
        assert flag == 1
        read_embeddings(path)  # flag verified on read without error

    def test_flag_requested_on_non_unit_rows(self, tmp_path):
        X = np.full((3, 4), 2.0)
        with pytest.raises(NormFlagViolationError):
            write_embeddings(X, tmp_path / "emb.bin", normalized=True)

    def test_header_row_count_exceeds_payload(self, tmp_path):
        # header declares n=2 rows of d=3 but payload carries only one
        blob = b"GEMEMB1" + struct.pack("<IQIB", 1, 2, 3, 0)
        blob += np.zeros(3, dtype="<f4").tobytes()
        path = tmp_path / "short.bin"
        path.write_bytes(blob)
        with pytest.raises(TruncatedPayloadError):
            read_embeddings(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "stub.bin"
        path.write_bytes(b"GEMEMB1" + b"\x01")
        with pytest.raises(TruncatedPayloadError):
            read_embeddings(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTEMB1" + b"\x00" * 40)
        with pytest.raises(BadMagicError):
            read_embeddings(path)

    def test_bad_version(self, tmp_path):
        blob = b"GEMEMB1" + struct.pack("<IQIB", 9, 0, 3, 0)
        path = tmp_path / "v9.bin"
        path.write_bytes(blob)
        with pytest.raises(BadMagicError):
            read_embeddings(path)

    def test_flag_set_but_rows_not_unit(self, tmp_path):
        blob = b"GEMEMB1" + struct.pack("<IQIB", 1, 1, 3, 1)
        blob += np.array([2.0, 0.0, 0.0], dtype="<f4").tobytes()
        path = tmp_path / "lie.bin"
        path.write_bytes(blob)
        with pytest.raises(NormFlagViolationError):
            read_embeddings(path)

    def test_rejects_non_matrix(self, tmp_path):
        with pytest.raises(SizeMismatchError):
            write_embeddings(np.zeros(5), tmp_path / "emb.bin")

    def test_no_temp_files_left_behind(self, tmp_path):
        write_embeddings(np.zeros((2, 2), dtype=np.float32), tmp_path / "emb.bin")
        assert [p.name for p in tmp_path.iterdir()] == ["emb.bin"]


class TestModelJson:
    def make_theta(self, k=3, d=5, seed=0):
        rng = np.random.default_rng(seed)
        return MixtureParams(
            means=normalize(rng.standard_normal((k, d))),
            kappas=rng.uniform(0.1, 500.0, size=k),
        )

    def test_round_trip_lossless(self, tmp_path):
        theta = self.make_theta()
        path = tmp_path / "model.json"
        save_model(path, theta, lam=5000.0, meta={"iters": 12, "seed": 0})
        back, lam, meta = load_model(path)
        np.testing.assert_array_equal(back.means, theta.means)
        np.testing.assert_array_equal(back.kappas, theta.kappas)
        assert lam == 5000.0
        assert meta == {"iters": 12, "seed": 0}

    def test_awkward_floats_survive(self, tmp_path):
        theta = MixtureParams(
            means=normalize(np.array([[1.0, 1e-17, -3.0], [0.1, 0.2, 0.3]])),
            kappas=np.array([np.nextafter(50.0, 51.0), 1e-12]),
        )
        path = tmp_path / "model.json"
        save_model(path, theta, lam=0.1 + 0.2, meta={})
        back, lam, _ = load_model(path)
        np.testing.assert_array_equal(back.means, theta.means)
        np.testing.assert_array_equal(back.kappas, theta.kappas)
        assert lam == 0.1 + 0.2

    def test_format_marker_checked(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"format": "SOMETHINGELSE"}))
        with pytest.raises(BadMagicError):
            load_model(path)

    def test_header_component_mismatch(self, tmp_path):
        theta = self.make_theta(k=2, d=4)
        path = tmp_path / "model.json"
        save_model(path, theta, lam=1.0, meta={})
        doc = json.loads(path.read_text())
        doc["k"] = 5
        path.write_text(json.dumps(doc))
        with pytest.raises(SizeMismatchError):
            load_model(path)

    def test_config_echo_defaults(self):
        echo = config_echo(FitConfig())
        assert echo["k"] == 24
        assert echo["lambda"] == 5000.0
        assert echo["max_iters"] == 200
        assert set(echo) >= {"stop_tol", "eps", "kappa_init", "estep_sweeps", "seed"}


class TestStudentFile:
    def make_model(self, seed=0, buckets=1 << 10, k=3):
        rng = np.random.default_rng(seed)
        return StudentModel(
            weights=rng.standard_normal((buckets, k)).astype(np.float32),
            bias=rng.standard_normal(k).astype(np.float32),
            featurizer=FeaturizerSpec(buckets=buckets, ngram_max=2, hash_seed=7),
        )

    def test_round_trip(self, tmp_path):
        model = self.make_model()
        path = tmp_path / "student.bin"
        save_student(path, model)
        back = load_student(path)
        np.testing.assert_array_equal(back.weights, model.weights)
        np.testing.assert_array_equal(back.bias, model.bias)
        assert back.featurizer == model.featurizer

    def test_header_layout(self, tmp_path):
        model = self.make_model(buckets=1 << 8, k=2)
        path = tmp_path / "student.bin"
        save_student(path, model)
        blob = path.read_bytes()
        assert blob[:7] == b"GEMSTU1"
        buckets, k, ngram_max, hash_seed = struct.unpack_from("<IIII", blob, 7)
        assert (buckets, k, ngram_max, hash_seed) == (256, 2, 2, 7)
        assert len(blob) == 7 + 16 + 4 * (k + buckets * k)

    def test_truncated(self, tmp_path):
        model = self.make_model(buckets=1 << 8, k=2)
        path = tmp_path / "student.bin"
        save_student(path, model)
        clipped = tmp_path / "clipped.bin"
        clipped.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(TruncatedPayloadError):
            load_student(clipped)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"GEMSTU9" + b"\x00" * 64)
        with pytest.raises(BadMagicError):
            load_student(path)

    def test_shape_mismatch_on_save(self, tmp_path):
        model = self.make_model()
        bad = StudentModel(
            weights=model.weights[:-1],
            bias=model.bias,
            featurizer=model.featurizer,
        )
        with pytest.raises(SizeMismatchError):
            save_student(tmp_path / "student.bin", bad)


class TestEscapedTsv:
    @pytest.mark.parametrize("s", NASTY)
    def test_escape_inverse(self, s):
        assert unescape_field(escape_field(s)) == s

    def test_escaped_form_is_single_line(self):
        for s in NASTY:
            esc = escape_field(s)
            assert "\t" not in esc and "\n" not in esc and "\r" not in esc

    @given(st.text(max_size=60))
    def test_escape_inverse_property(self, s):
        assert unescape_field(escape_field(s)) == s

    def test_dataset_round_trip(self, tmp_path):
        labels = np.arange(len(NASTY)) % 3
        path = tmp_path / "ds.tsv"
        write_dataset_tsv(path, labels, NASTY)
        back_labels, back_texts = read_dataset_tsv(path)
        np.testing.assert_array_equal(back_labels, labels)
        assert back_texts == NASTY

    def test_dataset_length_check(self, tmp_path):
        with pytest.raises(SizeMismatchError):
            write_dataset_tsv(tmp_path / "ds.tsv", np.array([0, 1]), ["only one"])

    def test_labels_round_trip(self, tmp_path):
        labels = np.array([0, 5, 2, 2, 7], dtype=np.int64)
        path = tmp_path / "labels.txt"
        write_labels(path, labels)
        np.testing.assert_array_equal(read_labels(path), labels)

    def test_texts_round_trip(self, tmp_path):
        path = tmp_path / "texts.txt"
        write_texts(path, NASTY)
        assert read_texts(path) == NASTY

    def test_one_record_per_line(self, tmp_path):
        path = tmp_path / "texts.txt"
        write_texts(path, NASTY)
        raw = path.read_text(encoding="utf-8")
        assert raw.count("\n") == len(NASTY)
