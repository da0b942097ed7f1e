import io
import json
import os

import numpy as np
import pytest

from _synth import (
    FixedEmbedder,
    VOCAB,
    make_nested_corpus,
    oracle_classifier,
    oracle_localizer,
)
from _factories import make_corpus
from picospan import pipeline
from picospan.corpus import derive_position_labels
from picospan.embedder import HashedEmbedder, write_pcxe
from picospan.errors import ModelError, PicospanError
from picospan.evaluator import evaluate
from picospan.localizer import BoundarySet
from picospan.optim import TrainConfig
from picospan.pipeline import (
    Models,
    PipelineConfig,
    SpanCandidate,
    build_embedder,
    enumerate_candidates,
    load_models,
    load_predictions,
    predict,
    predict_corpus,
    save_models,
    sweep_threshold,
    train_all,
    write_predictions,
    write_sweep_csv,
    write_sweep_json,
)


def oracle_models(sentence):
    emb = FixedEmbedder(sentence.tokens)
    labels = derive_position_labels(sentence)
    loc = oracle_localizer(
        emb, {tok: int(l) for tok, l in zip(sentence.tokens, labels)}
    )
    cls = oracle_classifier(
        emb, {"P": ("adults", "dependence"), "I": ("insulin", "dependence")}
    )
    return Models(emb, loc, cls)


class TestEnumerate:
    def test_cartesian_pairing(self):
        bounds = BoundarySet(starts=(2, 5), ends=(4, 9))
        cands = enumerate_candidates(bounds, uid="u-0")
        assert [(c.start, c.end) for c in cands] == [(2, 4), (2, 9), (5, 9)]
        assert all(c.uid == "u-0" for c in cands)

    def test_single_token_candidate_allowed(self):
        bounds = BoundarySet(starts=(3,), ends=(3,))
        assert [(c.start, c.end) for c in enumerate_candidates(bounds)] == [(3, 3)]

    def test_strict_mode_drops_single_token_pairs(self):
        bounds = BoundarySet(starts=(3, 4), ends=(3, 6))
        got = [(c.start, c.end) for c in enumerate_candidates(bounds, strict=True)]
        assert got == [(3, 6), (4, 6)]

    def test_empty_boundaries(self):
        assert enumerate_candidates(BoundarySet((), ())) == []
        assert enumerate_candidates(BoundarySet((1,), ())) == []

    def test_candidate_validates_extent(self):
        with pytest.raises(PicospanError):
            SpanCandidate("u", 4, 2)


class TestConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert cfg.threshold == 0.25
        assert cfg.tau == 0.5
        assert cfg.augmentation

    def test_round_trip(self):
        cfg = PipelineConfig(threshold=0.3, tau=0.6, seed=5, strict_spans=True,
                             train=TrainConfig(epochs=9))
        again = PipelineConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_validation(self):
        with pytest.raises(ModelError):
            PipelineConfig(threshold=0.6)
        with pytest.raises(ModelError):
            PipelineConfig(tau=1.0)


class TestBuildEmbedder:
    def test_hashed(self):
        emb = build_embedder({"kind": "hashed", "dim": 32, "seed": 3, "context": False})
        assert isinstance(emb, HashedEmbedder)
        assert (emb.dim, emb.seed, emb.context) == (32, 3, False)

    def test_pcxe_with_path(self, tmp_path):
        path = tmp_path / "v.pcxe"
        write_pcxe(str(path), 4, [("u-0", np.zeros((2, 4), "<f4"))])
        emb = build_embedder({"kind": "pcxe"}, embeddings_path=str(path))
        assert emb.dim == 4

    def test_pcxe_missing_path_rejected(self):
        with pytest.raises(ModelError):
            build_embedder({"kind": "pcxe"})

    def test_pcxe_dim_mismatch_rejected(self, tmp_path):
        path = tmp_path / "v.pcxe"
        write_pcxe(str(path), 4, [("u-0", np.zeros((2, 4), "<f4"))])
        with pytest.raises(ModelError, match="dim"):
            build_embedder({"kind": "pcxe", "dim": 8}, embeddings_path=str(path))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ModelError):
            build_embedder({"kind": "sparkly"})


class TestPredict:
    def test_oracle_models_recover_nested_gold(self, nested_sentence):
        models = oracle_models(nested_sentence)
        spans = predict(nested_sentence, models, PipelineConfig())
        got = {(s.start, s.end, c) for s in spans for c in s.categories}
        assert got == {(0, 4, "P"), (3, 4, "I")}

    def test_output_sorted(self, nested_sentence):
        models = oracle_models(nested_sentence)
        spans = predict(nested_sentence, models, PipelineConfig())
        keys = [(s.start, s.end) for s in spans]
        assert keys == sorted(keys)

    def test_raising_threshold_never_adds_predictions(self, nested_sentence):
        models = oracle_models(nested_sentence)
        prev = None
        for t in (0.2, 0.25, 0.3, 0.4, 0.5):
            spans = predict(nested_sentence, models, PipelineConfig(threshold=t))
            got = {(s.start, s.end, c) for s in spans for c in s.categories}
            if prev is not None:
                assert got <= prev
            prev = got

    def test_predict_corpus_keys_by_uid(self, nested_sentence):
        corpus = make_corpus(nested_sentence, doc_id="abs1")
        models = oracle_models(nested_sentence)
        by_uid = predict_corpus(corpus, models, PipelineConfig())
        assert set(by_uid) == {nested_sentence.uid}


class TestTrainAll:
    def _config(self, dim=64, epochs=150, lr=0.5, seed=0, augmentation=True):
        return PipelineConfig(
            seed=seed,
            augmentation=augmentation,
            embedder={"kind": "hashed", "dim": dim, "seed": 0, "context": True},
            train=TrainConfig(learning_rate=lr, batch_size=8, epochs=epochs, seed=seed),
        )

    def test_learns_nested_corpus(self):
        corpus = make_nested_corpus(12, seed=1)
        config = self._config()
        models = train_all(corpus, config)
        report = evaluate(predict_corpus(corpus, models, config), corpus)
        assert report.micro.f1 > 0.9

    def test_deterministic_model_files(self, tmp_path):
        corpus = make_nested_corpus(6, seed=2)
        config = self._config(epochs=20)
        for run in ("one", "two"):
            models = train_all(corpus, config)
            save_models(str(tmp_path / run), models, config)
        for name in ("localizer.json", "spanclass.json", "embedder.json"):
            a = (tmp_path / "one" / name).read_bytes()
            b = (tmp_path / "two" / name).read_bytes()
            assert a == b, name

    def test_warm_start_resumes(self):
        corpus = make_nested_corpus(6, seed=3)
        config = self._config(epochs=30)
        first = train_all(corpus, config)
        resumed = train_all(corpus, self._config(epochs=1), init=first,
                            embedder=first.embedder)
        fresh = train_all(corpus, self._config(epochs=1))
        report_resumed = evaluate(
            predict_corpus(corpus, resumed, config), corpus
        )
        report_fresh = evaluate(predict_corpus(corpus, fresh, config), corpus)
        assert report_resumed.micro.f1 >= report_fresh.micro.f1

    def test_empty_corpus_rejected(self):
        from picospan.corpus import Corpus

        with pytest.raises(ModelError):
            train_all(Corpus(()), self._config())


class TestModelDir:
    def test_round_trip(self, tmp_path, nested_sentence):
        corpus = make_corpus(nested_sentence, doc_id="abs1")
        config = PipelineConfig(
            embedder={"kind": "hashed", "dim": 32, "seed": 0, "context": True},
            train=TrainConfig(learning_rate=0.5, epochs=50, seed=0),
        )
        models = train_all(corpus, config)
        save_models(str(tmp_path / "m"), models, config)
        again = load_models(str(tmp_path / "m"))
        before = predict(nested_sentence, models, config)
        after = predict(nested_sentence, again, config)
        assert before == after

    def test_dim_mismatch_rejected(self, tmp_path, nested_sentence):
        corpus = make_corpus(nested_sentence, doc_id="abs1")
        config = PipelineConfig(
            embedder={"kind": "hashed", "dim": 16, "seed": 0, "context": True},
            train=TrainConfig(epochs=1),
        )
        models = train_all(corpus, config)
        save_models(str(tmp_path / "m"), models, config)
        emb_path = tmp_path / "m" / "embedder.json"
        cfg = json.loads(emb_path.read_text())
        cfg["dim"] = 64
        emb_path.write_text(json.dumps(cfg))
        with pytest.raises(ModelError, match="dim"):
            load_models(str(tmp_path / "m"))


class TestSweep:
    def test_monotone_candidate_counts(self, nested_sentence):
        corpus = make_corpus(nested_sentence, doc_id="abs1")
        models = oracle_models(nested_sentence)
        points = sweep_threshold(corpus, models, (0.2, 0.25, 0.3, 0.4, 0.5))
        assert [p.threshold for p in points] == [0.2, 0.25, 0.3, 0.4, 0.5]
        counts = [p.n_candidates for p in points]
        assert counts == sorted(counts, reverse=True)
        assert all(0.0 <= p.f1 <= 1.0 for p in points)

    def test_csv_and_json_writers(self, nested_sentence):
        corpus = make_corpus(nested_sentence, doc_id="abs1")
        models = oracle_models(nested_sentence)
        points = sweep_threshold(corpus, models, (0.25, 0.5))
        csv_buf = io.StringIO()
        write_sweep_csv(points, csv_buf)
        lines = csv_buf.getvalue().strip().splitlines()
        assert lines[0] == "threshold,precision,recall,f1,n_candidates"
        assert len(lines) == 3
        json_buf = io.StringIO()
        write_sweep_json(points, json_buf)
        parsed = json.loads(json_buf.getvalue())
        assert parsed[0]["threshold"] == 0.25


class TestPredictionIo:
    def test_round_trip(self, nested_sentence):
        models = oracle_models(nested_sentence)
        preds = {"abs1-0": predict(nested_sentence, models, PipelineConfig())}
        buf = io.StringIO()
        write_predictions(preds, buf)
        loaded = load_predictions(io.StringIO(buf.getvalue()))
        assert loaded == {"abs1-0": {(0, 4, "P"), (3, 4, "I")}}

    def test_multi_category_span_emits_one_record_per_category(self):
        from picospan.spanclass import LabeledSpan

        span = LabeledSpan(0, 2, (0.9, 0.8, 0.1), ("P", "I"))
        buf = io.StringIO()
        write_predictions({"u-0": [span]}, buf)
        record = json.loads(buf.getvalue())
        assert len(record["spans"]) == 2
        assert {r["category"] for r in record["spans"]} == {"P", "I"}
        assert record["spans"][0]["score"] == 0.9

    def test_malformed_line_reports_number(self):
        with pytest.raises(PicospanError, match="line 2"):
            load_predictions(io.StringIO('{"uid": "u-0", "spans": []}\n{broken\n'))

    def test_bytes_input_accepted(self):
        loaded = load_predictions(
            io.BytesIO(b'{"uid": "u-0", "spans": [{"start": 1, "end": 2, "category": "P"}]}\n')
        )
        assert loaded == {"u-0": {(1, 2, "P")}}
