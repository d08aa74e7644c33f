#include "mbcnn/train.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "mbcnn/metrics.hpp"

namespace mbcnn {
namespace {

int round_up8(int v) {
  const int r = ((v + 7) / 8) * 8;
  return r < 16 ? 16 : r;
}

// stack (1,h,w,c) crops into one batch tensor
Tensor stack_crops(const std::vector<Tensor>& crops) {
  const Shape s = crops.front().shape();
  Tensor out(Shape{int(crops.size()), s.h, s.w, s.c});
  float* po = out.mutable_data();
  const std::size_t stride = s.count();
  for (std::size_t i = 0; i < crops.size(); ++i) {
    std::memcpy(po + i * stride, crops[i].data(), stride * sizeof(float));
  }
  return out;
}

}  // namespace

TrainConfig make_train_config(bool stage2) {
  TrainConfig cfg;
  if (stage2) {
    cfg.patch = 256;
    cfg.batch = 4;
    cfg.lr = 1e-5;
    cfg.stage2 = true;
  }
  return cfg;
}

float train_step(Model& m, const Tensor& moire_batch,
                 const Tensor& clean_batch, const LossConfig& loss,
                 AdamState& st) {
  Tape tape;
  Model tracked = track_params(m, tape);
  ScalePyramid outs = model_forward(tracked, moire_batch);
  Tensor loss_t = multiscale_loss(outs, clean_batch, loss);
  auto node_grads = tape.backward(loss_t);
  auto grads = collect_grads(tracked, node_grads);
  adam_step(m, grads, st);
  return loss_t.data()[0];
}

ValStats validate_with(const InferFn& f,
                       const std::vector<MoirePair>& val_set) {
  if (val_set.empty()) {
    throw std::invalid_argument("validate: empty validation set");
  }
  double sum_psnr = 0.0, sum_ssim = 0.0;
  for (const MoirePair& pair : val_set) {
    const int h = pair.moire.shape().h, w = pair.moire.shape().w;
    const int th = round_up8(h), tw = round_up8(w);
    Tensor in = pair.moire;
    if (th != h || tw != w) in = pad_reflect_to(in, th, tw);
    Tensor out = f(in);
    if (!(out.shape() == in.shape())) {
      throw std::runtime_error("validate: inference changed the image size");
    }
    if (th != h || tw != w) out = crop(out, 0, 0, h, w);
    out = clamp01(out);
    sum_psnr += psnr(out, pair.clean);
    sum_ssim += ssim(out, pair.clean);
  }
  const double n = double(val_set.size());
  return {sum_psnr / n, sum_ssim / n};
}

ValStats validate(const Model& m, const std::vector<MoirePair>& val_set) {
  return validate_with(
      [&m](const Tensor& in) { return model_forward(m, in).z1; }, val_set);
}

TrainResult train(Model model, const TrainConfig& cfg,
                  const std::vector<MoirePair>& train_set,
                  const std::vector<MoirePair>& val_set,
                  const EpochHook& on_epoch) {
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (cfg.patch < 16 || cfg.patch % 8 != 0) {
    throw std::invalid_argument("train: patch must be >= 16, divisible by 8");
  }
  if (cfg.batch < 1 || cfg.epochs_max < 1 || cfg.lr <= 0.0) {
    throw std::invalid_argument("train: bad batch/epochs/lr");
  }
  for (const MoirePair& p : train_set) {
    if (p.moire.shape().h < cfg.patch || p.moire.shape().w < cfg.patch) {
      throw std::invalid_argument("train: image smaller than the patch size");
    }
  }

  AdamState st;
  st.lr = cfg.lr;
  ScheduleState sched = make_schedule(cfg.lr);
  TrainResult res;
  res.model = model;
  res.best_psnr = -std::numeric_limits<double>::infinity();
  Rng root(cfg.seed);

  const std::size_t n = train_set.size();
  for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
    Rng er = root.child(std::uint64_t(epoch));
    const std::vector<int> perm = er.permutation(int(n));
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t stop = std::min(n, start + cfg.batch);
      std::vector<Tensor> bm, bc;
      for (std::size_t i = start; i < stop; ++i) {
        const MoirePair& pair = train_set[perm[i]];
        const int h = pair.moire.shape().h, w = pair.moire.shape().w;
        const int y0 = int(er.uniform_int(std::uint64_t(h - cfg.patch + 1)));
        const int x0 = int(er.uniform_int(std::uint64_t(w - cfg.patch + 1)));
        bm.push_back(crop(pair.moire, y0, x0, cfg.patch, cfg.patch));
        bc.push_back(crop(pair.clean, y0, x0, cfg.patch, cfg.patch));
      }
      st.lr = sched.lr;
      loss_sum += train_step(model, stack_crops(bm), stack_crops(bc),
                             cfg.loss, st);
      ++batches;
    }

    const ValStats vs = validate(model, val_set);
    res.log.push_back(
        {epoch, sched.lr, loss_sum / batches, vs.psnr, vs.ssim});
    if (on_epoch) on_epoch(res.log.back());
    if (vs.psnr > res.best_psnr) {
      res.best_psnr = vs.psnr;
      res.best_epoch = epoch;
      res.model = model;
    }
    schedule_update(sched, vs.psnr);
    if (sched.stop) {
      res.stopped_early = true;
      break;
    }
  }
  return res;
}

}  // namespace mbcnn
