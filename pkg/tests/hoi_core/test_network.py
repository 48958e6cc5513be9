# -*- coding: utf-8 -*-
"""Backbone, positional encoding, transformer stages, heads and the composed network."""

import pytest
import torch
from torch import nn

from hoi_core.errors import ValidationError
from hoi_core.models import CostWeights, ExperimentConfig, LossWeights, ModelConfig
from hoi_core.network import HoiTransformer, sine_positional_encoding


def _image(config: ModelConfig, seed: int = 0, batch: int = 1) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(batch, 3, config.image_h, config.image_w, generator=generator, dtype=torch.float64)


@pytest.fixture
def model(tiny_model_config):
    return HoiTransformer(tiny_model_config).eval()


class TestBackbone:
    def test_shape(self, model, tiny_model_config):
        z_b = model.backbone_forward(_image(tiny_model_config, batch=2))
        assert z_b.shape == (2, tiny_model_config.backbone_channels, tiny_model_config.grid_h,
                             tiny_model_config.grid_w)

    def test_zero_image_zero_biases(self, model, tiny_model_config):
        with torch.no_grad():
            for layer in model.backbone.layers:
                layer.bias.zero_()
        z_b = model.backbone_forward(torch.zeros(3, tiny_model_config.image_h, tiny_model_config.image_w))
        assert not z_b.any()

    def test_deterministic(self, model, tiny_model_config):
        image = _image(tiny_model_config)
        assert torch.equal(model.backbone_forward(image), model.backbone_forward(image.clone()))

    def test_shape_mismatch(self, model):
        with pytest.raises(ValidationError):
            model.backbone_forward(torch.zeros(3, 17, 32, dtype=torch.float64))


class TestPositionalEncoding:
    def test_shape_and_bounds(self):
        pos = sine_positional_encoding(32, 8, 8)
        assert pos.shape == (32, 8, 8)
        assert pos.abs().max() <= 1.0

    def test_fixed(self):
        assert torch.equal(sine_positional_encoding(32, 8, 8), sine_positional_encoding(32, 8, 8))

    def test_positions_distinct(self):
        vectors = sine_positional_encoding(32, 8, 8).flatten(1).T
        distances = torch.cdist(vectors, vectors)
        off_diagonal = distances + torch.eye(64, dtype=distances.dtype) * 1e9
        assert off_diagonal.min() > 1e-6

    def test_indivisible_width(self):
        with pytest.raises(ValidationError):
            sine_positional_encoding(30, 4, 4)

    def test_config_rejects_indivisible_width(self):
        with pytest.raises(ValueError):
            ModelConfig.tiny(d_model=18, n_heads=2)


class TestEncoder:
    def test_shape(self, model, tiny_model_config):
        z_c = model.project(model.backbone_forward(_image(tiny_model_config)))
        assert model.encoder_forward(z_c).shape == z_c.shape

    def test_zero_layers_is_identity(self, tiny_model_config):
        model = HoiTransformer(tiny_model_config.model_copy(update={"n_encoder_layers": 0}))
        z_c = torch.randn(1, tiny_model_config.d_model, tiny_model_config.grid_h, tiny_model_config.grid_w,
                          dtype=torch.float64)
        assert torch.equal(model.encoder_forward(z_c), z_c)

    def test_spatial_permutation_equivariance(self):
        config = ModelConfig.tiny(grid_h=2, grid_w=2, image_h=16, image_w=16)
        model = HoiTransformer(config).eval()
        generator = torch.Generator().manual_seed(3)
        z_c = torch.randn(1, config.d_model, 2, 2, generator=generator, dtype=torch.float64)
        pos = model.positional_encoding()
        order = torch.tensor([2, 0, 3, 1])

        def permute(tensor: torch.Tensor) -> torch.Tensor:
            flat = tensor.flatten(-2)
            return flat[..., order].reshape(tensor.shape)

        with torch.no_grad():
            reference = model.encoder_forward(z_c, pos)
            permuted = model.encoder_forward(permute(z_c), permute(pos))
        torch.testing.assert_close(permuted, permute(reference), rtol=0, atol=1e-10)

    def test_shape_mismatch(self, model):
        with pytest.raises(ValidationError):
            model.encoder_forward(torch.zeros(1, 5, 4, 4, dtype=torch.float64))


class TestDecoder:
    def test_layers_and_shapes(self, tiny_model_config):
        config = tiny_model_config.model_copy(update={"n_decoder_layers": 3})
        model = HoiTransformer(config).eval()
        z_e = model.encoder_forward(model.project(model.backbone_forward(_image(config))))
        layers = model.decoder_forward(z_e)
        assert len(layers) == 3
        assert all(layer.shape == (1, config.n_queries, config.d_model) for layer in layers)

    def test_query_permutation_equivariance(self, model, tiny_model_config):
        order = torch.tensor([3, 1, 0, 2])
        with torch.no_grad():
            z_e = model.encoder_forward(model.project(model.backbone_forward(_image(tiny_model_config))))
            reference = model.decoder_forward(z_e)
            permuted = model.decoder_forward(z_e, queries=model.query_embed[order])
        for ref_layer, perm_layer in zip(reference, permuted):
            torch.testing.assert_close(perm_layer, ref_layer[:, order], rtol=0, atol=1e-10)

    def test_bad_queries(self, model, tiny_model_config):
        z_e = torch.zeros(1, tiny_model_config.d_model, tiny_model_config.grid_h, tiny_model_config.grid_w,
                          dtype=torch.float64)
        with pytest.raises(ValidationError):
            model.decoder_forward(z_e, queries=torch.zeros(4, 3, dtype=torch.float64))


class TestHeads:
    def test_zero_weights(self, model, tiny_model_config):
        with torch.no_grad():
            for param in model.heads.parameters():
                param.zero_()
        outputs = model.heads_forward(torch.zeros(tiny_model_config.n_queries, tiny_model_config.d_model,
                                                  dtype=torch.float64))
        n_classes = tiny_model_config.n_obj_classes + 1
        assert torch.all(outputs.human_boxes == 0.5)
        assert torch.all(outputs.object_boxes == 0.5)
        assert torch.all(outputs.action_probs == 0.5)
        torch.testing.assert_close(outputs.object_probs, torch.full_like(outputs.object_probs, 1.0 / n_classes))

    def test_shared_across_layers(self, model):
        assert isinstance(model.heads.object_class, nn.Linear)
        assert model.heads.human_box.num_layers == 3


class TestForward:
    def test_prediction_invariants(self, model, tiny_model_config):
        outputs = model(_image(tiny_model_config, batch=2))
        assert len(outputs) == 2
        for per_layer in outputs:
            assert len(per_layer) == tiny_model_config.n_decoder_layers
            for preds in per_layer:
                assert len(preds) == tiny_model_config.n_queries
                sums = preds.object_probs.sum(dim=-1)
                assert torch.all((sums - 1).abs() <= 1e-9)
                for tensor in (preds.human_boxes, preds.object_boxes, preds.action_probs):
                    assert tensor.min() >= 0 and tensor.max() <= 1
                for prediction in preds.to_predictions():
                    prediction.validate()

    def test_deterministic(self, tiny_model_config):
        image = _image(tiny_model_config)
        first = HoiTransformer(tiny_model_config).predict(image)[0]
        second = HoiTransformer(tiny_model_config).predict(image)[0]
        assert torch.equal(first.object_probs, second.object_probs)
        assert torch.equal(first.human_boxes, second.human_boxes)

    def test_seed_changes_parameters(self, tiny_model_config):
        first = HoiTransformer(tiny_model_config)
        second = HoiTransformer(tiny_model_config.model_copy(update={"seed": tiny_model_config.seed + 1}))
        assert not torch.equal(first.query_embed, second.query_embed)

    def test_initialization_leaves_global_rng(self, tiny_model_config):
        torch.manual_seed(123)
        expected = torch.rand(3)
        torch.manual_seed(123)
        HoiTransformer(tiny_model_config)
        assert torch.equal(torch.rand(3), expected)

    def test_parameter_groups(self, model):
        n_backbone = sum(p.numel() for p in model.backbone_parameters())
        n_rest = sum(p.numel() for p in model.non_backbone_parameters())
        assert n_backbone + n_rest == model.count_parameters()
        assert model.describe()["parameters"] == model.count_parameters()
        assert all(p.dtype == torch.float64 for p in model.parameters())


@pytest.mark.slow
def test_full_scale_shapes():
    config = ModelConfig.full()
    model = HoiTransformer(config).eval()
    final = model.predict(_image(config))[0]
    assert final.object_probs.shape == (100, 81)
    assert final.action_probs.shape == (100, 117)
    assert final.human_boxes.shape == (100, 4)


class TestDefaults:
    def test_full_scale_architecture(self):
        config = ModelConfig()
        assert (config.n_queries, config.d_model, config.n_heads) == (100, 256, 8)
        assert (config.n_encoder_layers, config.n_decoder_layers) == (6, 6)
        assert (config.n_obj_classes, config.n_act_classes) == (80, 117)
        assert ExperimentConfig.profile("full").model == config

    def test_cost_and_loss_weights(self):
        cost = CostWeights()
        assert (cost.eta_b, cost.eta_u, cost.eta_c, cost.eta_a) == (2.5, 1.0, 1.0, 1.0)
        assert cost.epsilon == 1e-4
        loss = LossWeights()
        assert (loss.lambda_b, loss.lambda_u, loss.lambda_c, loss.lambda_a) == (2.5, 1.0, 1.0, 1.0)
        assert loss.focal_gamma == 2.0
