# -*- coding: utf-8 -*-
"""Loss gradients, the finite-difference check and the training loop."""

import json

import pytest
import torch

import hoi_core.gradcheck as gradcheck_module
from hoi_core.data import generate_synthetic
from hoi_core.errors import ValidationError
from hoi_core.evaluation import detect, eval_hico
from hoi_core.gradcheck import ReluSignRecorder, check_gradients, random_instances, run_gradcheck
from hoi_core.models import ExperimentConfig, LossWeights, ModelConfig, SynthConfig
from hoi_core.network import HoiTransformer
from hoi_core.tracking import TrainingTracker
from hoi_core.trainer import _batch_order, loss_gradients, train


def _tiny_dataset(config: ExperimentConfig, n_images: int = 4, seed: int = 5):
    model_cfg = config.model
    synth = SynthConfig(seed=seed, n_images=n_images, image_h=model_cfg.image_h, image_w=model_cfg.image_w,
                        n_obj_classes=model_cfg.n_obj_classes)
    dataset = generate_synthetic(synth)
    return dataset.images_tensor(), [record.instances for record in dataset.records]


class TestLossGradients:
    def test_every_parameter_has_a_gradient(self, tiny_config):
        model, image, gts = random_instances(tiny_config, 1, seed=0)[0]
        result = loss_gradients(model, image, gts, tiny_config.loss_weights, tiny_config.cost_weights)
        names = {name for name, _ in model.named_parameters()}
        assert set(result.gradients) == names
        for name, param in model.named_parameters():
            assert result.gradients[name].shape == param.shape
        assert result.loss > 0
        assert len(result.assignments) == tiny_config.model.n_decoder_layers

    def test_zero_weights_give_zero_gradients(self, tiny_config):
        model, image, gts = random_instances(tiny_config, 1, seed=1)[0]
        weights = LossWeights(lambda_b=0, lambda_u=0, lambda_c=0, lambda_a=0)
        result = loss_gradients(model, image, gts, weights)
        assert result.loss == 0.0
        assert all(not grad.any() for grad in result.gradients.values())

    def test_does_not_touch_parameter_grads(self, tiny_config):
        model, image, gts = random_instances(tiny_config, 1, seed=2)[0]
        loss_gradients(model, image, gts)
        assert all(param.grad is None for param in model.parameters())


class TestGradcheck:
    def test_sampled_coordinates(self, tiny_config):
        report = run_gradcheck(tiny_config, n_instances=2, seed=0, samples_per_param=3)
        assert report.n_checked > 0
        assert report.passed, report.failures[:3]

    def test_instances_use_dense_images(self, tiny_config):
        instances = random_instances(tiny_config, 2, seed=0)
        for _, image, _ in instances:
            assert image.dtype == torch.float64
            assert image.shape == (3, tiny_config.model.image_h, tiny_config.model.image_w)
            assert (image > 0).all()
        assert not torch.equal(instances[0][1], instances[1][1])

    def test_relu_recorder_follows_forward_passes(self, tiny_config):
        model, image, _ = random_instances(tiny_config, 1, seed=0)[0]
        recorder = ReluSignRecorder(model)
        _, patterns = recorder.capture(lambda: float(model(image)[0][-1].action_probs.sum()))
        assert len(patterns) > 0
        assert all(pattern.dtype == torch.bool for pattern in patterns)
        recorder.remove()
        recorder.patterns = []
        model(image)
        assert recorder.patterns == []

    def test_kinks_of_a_blank_image_are_skipped(self, tiny_config):
        model, _, gts = random_instances(tiny_config, 1, seed=4)[0]
        blank = torch.zeros(3, tiny_config.model.image_h, tiny_config.model.image_w, dtype=torch.float64)
        report = check_gradients(model, blank, gts, tiny_config.loss_weights, tiny_config.cost_weights,
                                 samples_per_param=2)
        assert report.n_skipped > 0
        assert report.n_checked > 0
        assert report.passed, report.failures[:3]

    def test_detects_a_wrong_gradient(self, tiny_config, monkeypatch):
        model, image, gts = random_instances(tiny_config, 1, seed=3)[0]
        real = gradcheck_module.loss_gradients

        def doubled(*args, **kwargs):
            result = real(*args, **kwargs)
            result.gradients = {name: grad * 2 + 1 for name, grad in result.gradients.items()}
            return result

        monkeypatch.setattr(gradcheck_module, "loss_gradients", doubled)
        report = check_gradients(model, image, gts, samples_per_param=1)
        assert not report.passed

    def test_synthetic_actions_required(self, tiny_config):
        config = tiny_config.with_overrides({"model": {"n_act_classes": 2}})
        with pytest.raises(ValidationError):
            random_instances(config, 1, seed=0)

    @pytest.mark.slow
    def test_every_coordinate_of_ten_instances(self, tiny_config):
        assert run_gradcheck(tiny_config, n_instances=10, seed=0).passed


class TestBatchOrder:
    def test_epochs_cover_every_image(self):
        batches = _batch_order(n_images=5, batch_size=2, steps=5, seed=0)
        assert len(batches) == 5
        assert all(len(batch) == 2 for batch in batches)
        flat = [index for batch in batches for index in batch]
        assert sorted(flat[:5]) == [0, 1, 2, 3, 4]

    def test_seeded(self):
        assert _batch_order(6, 4, 10, seed=1) == _batch_order(6, 4, 10, seed=1)

    def test_batch_larger_than_dataset(self):
        assert all(len(batch) == 3 for batch in _batch_order(3, 8, 4, seed=0))


class TestTrain:
    def test_zero_learning_rate_keeps_parameters(self, tiny_config):
        config = tiny_config.with_overrides({"train": {"lr": 0.0, "backbone_lr": 0.0, "weight_decay": 0.0,
                                                       "steps": 3}})
        images, gts = _tiny_dataset(config)
        model = HoiTransformer(config.model)
        before = {name: param.detach().clone() for name, param in model.named_parameters()}
        train(images, gts, config, model=model)
        for name, param in model.named_parameters():
            assert torch.equal(param, before[name]), name

    def test_same_seed_same_history(self, tiny_config):
        config = tiny_config.with_overrides({"train": {"steps": 4, "lr": 1e-3}})
        images, gts = _tiny_dataset(config)
        first = train(images, gts, config)
        second = train(images, gts, config)
        assert [b.to_dict() for b in first.history] == [b.to_dict() for b in second.history]
        for (name, a), (_, b) in zip(first.model.named_parameters(), second.model.named_parameters()):
            assert torch.equal(a, b), name

    def test_tracker_history(self, tiny_config, tmp_path):
        config = tiny_config.with_overrides({"train": {"steps": 3, "lr_drop_step": 2}})
        images, gts = _tiny_dataset(config)
        tracker = TrainingTracker(log_every=1, record_time=False)
        result = train(images, gts, config, tracker=tracker)
        assert len(tracker.history) == 3
        assert tracker.history[0].lr == pytest.approx(config.train.lr)
        assert tracker.history[2].lr == pytest.approx(config.train.lr * config.train.lr_gamma)
        assert result.initial_loss == tracker.initial_total()

        path = tmp_path / "history.json"
        tracker.export_to_json(str(path))
        exported = json.loads(path.read_text(encoding="utf-8"))
        assert exported["summary"]["steps"] == 3
        assert exported["history"][0]["elapsed_seconds"] == 0.0

    def test_rejects_mismatched_inputs(self, tiny_config):
        images, gts = _tiny_dataset(tiny_config)
        with pytest.raises(ValidationError):
            train(images, gts[:-1], tiny_config)
        with pytest.raises(ValidationError):
            train(images[:0], [], tiny_config)

    @pytest.mark.slow
    def test_overfits_the_desk_scenes(self):
        config = ExperimentConfig.profile("desk")
        assert config.train.steps <= 2000
        dataset = generate_synthetic(config.synth)
        assert len(dataset.records) == 8
        images = dataset.images_tensor()
        result = train(images, [record.instances for record in dataset.records], config)
        assert isinstance(result.model.config, ModelConfig)
        assert result.final_loss < 0.1 * result.initial_loss

        eval_config = config.eval.model_copy(update={"top_k": 100})
        detections = detect(result.model, images, dataset.image_ids, eval_config)
        report = eval_hico(detections, dataset.gts_per_image(), dataset.header.hoi_counts,
                           dataset.header.n_obj_classes, dataset.header.n_act_classes, eval_config)
        assert report.mean("default", "full") >= 0.95
