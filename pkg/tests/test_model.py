
import numpy as np
import pytest
import torch

from fbsc.config import ModelConfig
from fbsc.model import CVAE, FBSCModel, NotTrained, to_tensor
from fbsc.train import pack_backward, train_scene_encoder


def trained_stub(cfg, seed=0):
    torch.manual_seed(seed)
    model = FBSCModel(cfg)
    model.scene_encoder.freeze()
    return model


def frames(b, t, size=8, seed=0, dtype=torch.float32):
    g = torch.Generator().manual_seed(seed)
    return torch.rand(b, t, 3, size, size, generator=g, dtype=dtype)


class TestSceneEncoder:
    def test_untrained_refuses(self, tiny_model_config):
        model = FBSCModel(tiny_model_config)
        with pytest.raises(NotTrained):
            model.encode_scene(torch.zeros(1, 3, 8, 8))

    def test_deterministic_embedding_of_configured_size(self, tiny_model_config):
        model = trained_stub(tiny_model_config)
        x = torch.rand(2, 3, 8, 8)
        a, b = model.encode_scene(x), model.encode_scene(x)
        assert torch.equal(a, b) and a.shape == (2, tiny_model_config.scene_dim)

    def test_training_loss_trend_and_freeze(self, tiny_model_config):
        rng = np.random.default_rng(0)
        # two scenes: dark and bright noise
        crops = np.concatenate([rng.integers(0, 100, (64, 8, 8, 3)), rng.integers(150, 256, (64, 8, 8, 3))]).astype(np.uint8)
        labels = np.r_[np.zeros(64), np.ones(64)].astype(np.int64)
        model = FBSCModel(tiny_model_config)
        history = train_scene_encoder(model, crops, labels, epochs=6, lr=1e-2, seed=0, batch_size=16)
        assert history[-1] < history[0]
        assert all(not p.requires_grad for p in model.scene_encoder.parameters())
        assert bool(model.scene_encoder.trained)

    def test_single_scene_logged(self, tiny_model_config, caplog):
        crops = np.zeros((4, 8, 8, 3), dtype=np.uint8)
        train_scene_encoder(FBSCModel(tiny_model_config), crops, np.zeros(4, dtype=np.int64), 1, 1e-3, 0)
        assert "single scene" in caplog.text


class TestCVAE:
    def test_shape_and_modes(self):
        torch.manual_seed(0)
        cvae = CVAE(6, 4, 3, gamma=1.0)
        feat, scene = torch.rand(2, 6, 4, 4), torch.rand(2, 4)
        out, dist = cvae(feat, scene, "mean")
        assert out.shape == feat.shape and dist.mean.shape == (2, 3)
        assert torch.equal(out, cvae(feat, scene, "mean")[0])
        s1 = cvae(feat, scene, "stochastic", torch.Generator().manual_seed(5))[0]
        s2 = cvae(feat, scene, "stochastic", torch.Generator().manual_seed(5))[0]
        assert torch.equal(s1, s2) and not torch.equal(s1, out)
        assert torch.all(dist.variance > 0)

    def test_scene_shape_mismatch(self):
        cvae = CVAE(6, 4, 3, gamma=1.0)
        with pytest.raises(ValueError, match="scene embedding"):
            cvae(torch.rand(2, 6, 4, 4), torch.rand(2, 5))
        with pytest.raises(ValueError, match="channels"):
            cvae(torch.rand(2, 5, 4, 4), torch.rand(2, 4))

    def test_gamma_zero_ignores_decoder(self, tiny_model_config):
        cfg = ModelConfig(**{**tiny_model_config.__dict__, "gamma": 0.0})
        model = trained_stub(cfg)
        x, scene = frames(2, 8), torch.rand(2, cfg.scene_dim)
        before = model.forward_predict(x, scene, "stochastic", torch.Generator().manual_seed(1)).frames
        with torch.no_grad():
            for net in (model.forward_net, model.backward_net):
                for cvae in (net.cvae2, net.cvae3):
                    for p in list(cvae.dec_conv1.parameters()) + list(cvae.dec_conv2.parameters()):
                        p.zero_()
        after = model.forward_predict(x, scene, "stochastic", torch.Generator().manual_seed(1)).frames
        assert torch.equal(before, after)
        # the scene embedding has no path to the output either
        other = model.forward_predict(x, torch.rand(2, cfg.scene_dim), "mean").frames
        assert torch.equal(model.forward_predict(x, scene, "mean").frames, other)


class TestForward:
    def test_shape_range(self, tiny_model_config):
        model = trained_stub(tiny_model_config)
        out = model.forward_predict(frames(3, 8), torch.rand(3, 4))
        assert out.frames.shape == (3, 7, 3, 8, 8)
        assert torch.isfinite(out.frames).all() and out.frames.min() >= 0 and out.frames.max() <= 1
        assert len(out.latents) == 2

    def test_wrong_input_count(self, tiny_model_config):
        with pytest.raises(ValueError, match="8 input frames"):
            trained_stub(tiny_model_config).forward_predict(frames(1, 7), torch.rand(1, 4))

    def test_batch_is_independent_and_ordered(self, tiny_model_config):
        model = trained_stub(tiny_model_config)
        x, s = frames(3, 8, dtype=torch.float64), torch.rand(3, 4, dtype=torch.float64)
        model.double()
        bundle = model.forward_predict(x, s)
        for b, part in enumerate(bundle.split()):
            single = model.forward_predict(x[b : b + 1], s[b : b + 1]).frames
            torch.testing.assert_close(part.frames, single, rtol=0, atol=1e-12)

    def test_static_training_beats_motion(self, tiny_model_config):
        model = trained_stub(tiny_model_config)
        net = model.forward_net
        opt = torch.optim.Adam(net.parameters(), lr=1e-2)
        g = torch.Generator().manual_seed(0)
        scene = torch.zeros(16, tiny_model_config.scene_dim)
        for _ in range(150):
            img = torch.rand(16, 1, 3, 8, 8, generator=g)
            out, _ = net(img.expand(-1, 8, -1, -1, -1), scene)
            loss = ((out - img) ** 2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
        with torch.no_grad():
            img = torch.rand(16, 1, 3, 16, 16, generator=g)
            static = img[..., 4:12, 4:12].expand(-1, 15, -1, -1, -1)
            moving = torch.stack([img[:, 0, :, 4 : 12, k % 8 : k % 8 + 8] for k in range(15)], dim=1)
            err = []
            for clip in (static, moving):
                out, _ = net(clip[:, :8], scene)
                err.append(float(((out - clip[:, 8:]) ** 2).mean()))
        assert err[0] < err[1]


class TestBackward:
    def test_arity(self, tiny_model_config):
        model = trained_stub(tiny_model_config)
        for i in range(1, 7):
            out, latents = model.backward_predict(frames(2, i), frames(2, 8 - i), torch.rand(2, 4))
            assert out.shape == (2, 3, 8, 8) and len(latents) == 2

    @pytest.mark.parametrize("i", [0, 7])
    def test_step_out_of_range(self, tiny_model_config, i):
        model = trained_stub(tiny_model_config)
        with pytest.raises(ValueError, match="outside"):
            model.backward_predict(frames(1, i), frames(1, 8 - i), torch.rand(1, 4))

    def test_observed_count(self, tiny_model_config):
        with pytest.raises(ValueError, match="observed"):
            trained_stub(tiny_model_config).backward_predict(frames(1, 2), frames(1, 5), torch.rand(1, 4))

    def test_one_network_for_every_step(self, tiny_model_config):
        model = trained_stub(tiny_model_config)
        n_params = sum(p.numel() for p in model.backward_net.parameters())
        # one set of weights regardless of step; the packing only reorders frames
        assert n_params == sum(p.numel() for p in FBSCModel(tiny_model_config).backward_net.parameters())
        assert model.backward_net.in_frames == 8 and model.backward_net.out_frames == 1

    def test_packing_matches_reverse_order(self):
        n = 8
        seq = torch.arange(15.0).reshape(1, 15, 1, 1, 1)  # inputs 0..7, f_t at 8, predictions 9..14
        for i in range(1, 7):
            packed = pack_backward(seq, torch.tensor([i]), n).flatten().tolist()
            future = list(range(n + i, n, -1))
            observed = list(range(n, i, -1))
            assert packed == future + observed
            # the target f[t+(i-n)s] sits at input slot i
            assert i not in packed


class TestToTensor:
    def test_uint8_scaled(self):
        arr = np.full((2, 4, 4, 3), 255, dtype=np.uint8)
        t = to_tensor(arr)
        assert t.shape == (2, 3, 4, 4) and float(t.max()) == 1.0
