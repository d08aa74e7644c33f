#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mbcnn/checkpoint.hpp"
#include "mbcnn/config.hpp"
#include "mbcnn/dataset_io.hpp"
#include "mbcnn/image_io.hpp"
#include "mbcnn/metrics.hpp"
#include "mbcnn/model.hpp"
#include "mbcnn/synth.hpp"
#include "mbcnn/train.hpp"
#include "mbcnn/verify.hpp"

namespace fs = std::filesystem;
using namespace mbcnn;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load_config_checked(const std::string& path) {
  try {
    return load_run_config(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

Tensor infer_image(const Model& m, const Tensor& img, bool ensemble) {
  const Shape s = img.shape();
  auto legal = [](int v) { return std::max(16, (v + 7) / 8 * 8); };
  int ph = legal(s.h), pw = legal(s.w);
  if (ensemble) ph = pw = std::max(ph, pw);
  const Tensor padded = pad_reflect_to(img, ph, pw);
  const Tensor out =
      ensemble ? self_ensemble(m, padded) : model_forward(m, padded).z1;
  return clamp01(crop(out, 0, 0, s.h, s.w));
}

std::vector<MoirePair> to_pairs(std::vector<DiskPair> disk) {
  std::vector<MoirePair> out;
  out.reserve(disk.size());
  for (auto& d : disk) {
    MoirePair p;
    p.moire = std::move(d.moire);
    p.clean = std::move(d.clean);
    out.push_back(std::move(p));
  }
  return out;
}

int cmd_synth(const std::string& config_path) {
  const RunConfig rc = load_config_checked(config_path);
  if (rc.procedural_n < 1)
    throw UsageError("synth needs data.procedural_n in the config");
  const int sz = rc.procedural_size;
  const auto train_set =
      make_dataset(rc.procedural_n, sz, sz, rc.train.seed);
  write_dataset((fs::path(rc.out_dir) / "train").string(), train_set);
  std::printf("wrote %d training pairs to %s/train\n", rc.procedural_n,
              rc.out_dir.c_str());
  if (rc.procedural_val_n > 0) {
    const auto val_set =
        make_dataset(rc.procedural_val_n, sz, sz, rc.train.seed + 1);
    write_dataset((fs::path(rc.out_dir) / "val").string(), val_set);
    std::printf("wrote %d validation pairs to %s/val\n", rc.procedural_val_n,
                rc.out_dir.c_str());
  }
  return 0;
}

int cmd_train(const std::string& config_path) {
  const RunConfig rc = load_config_checked(config_path);
  std::vector<MoirePair> train_set, val_set;
  if (rc.procedural_n > 0) {
    const int sz = rc.procedural_size;
    train_set = make_dataset(rc.procedural_n, sz, sz, rc.train.seed);
    val_set = make_dataset(rc.procedural_val_n, sz, sz, rc.train.seed + 1);
  } else if (!rc.train_dir.empty()) {
    train_set = to_pairs(read_pairs(rc.train_dir));
    val_set = to_pairs(read_pairs(rc.val_dir));
  } else {
    throw UsageError("train needs a data section in the config");
  }

  fs::create_directories(rc.out_dir);
  const std::string log_path = (fs::path(rc.out_dir) / "train_log.csv").string();
  std::ofstream log(log_path, std::ios::trunc);
  log << "epoch,lr,train_loss,val_psnr,val_ssim\n";
  const auto on_epoch = [&log](const EpochStats& e) {
    char row[160];
    std::snprintf(row, sizeof row, "%d,%.8g,%.8g,%.6f,%.6f\n", e.epoch, e.lr,
                  e.train_loss, e.val_psnr, e.val_ssim);
    log << row;
    log.flush();
    std::fputs(row, stdout);
    std::fflush(stdout);
  };

  Model m = build_model<float>(rc.arch, rc.train.seed);
  const TrainResult res = train(std::move(m), rc.train, train_set, val_set,
                                on_epoch);
  const std::string ckpt_path = (fs::path(rc.out_dir) / "model.ckpt").string();
  save_checkpoint(res.model, ckpt_path);
  std::printf("best val psnr %.3f dB at epoch %d%s\n", res.best_psnr,
              res.best_epoch, res.stopped_early ? " (stopped early)" : "");
  std::printf("checkpoint: %s\nlog: %s\n", ckpt_path.c_str(), log_path.c_str());
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& in_path,
              const std::string& out_path, bool ensemble,
              const std::string& ablate_mode) {
  Model m = load_checkpoint(ckpt);
  if (!ablate_mode.empty()) m = ablate(m, ablate_mode);
  const Tensor img = read_image(in_path);
  write_image(infer_image(m, img, ensemble), out_path);
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir,
             const std::string& csv_path) {
  const Model m = load_checkpoint(ckpt);
  const std::vector<DiskPair> pairs = read_pairs(data_dir);

  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  csv << "id,input_psnr,output_psnr,output_ssim\n";
  double sum_in = 0, sum_out = 0, sum_ssim = 0;
  for (const auto& p : pairs) {
    const Tensor out = infer_image(m, p.moire, false);
    const double pin = psnr(p.moire, p.clean);
    const double pout = psnr(out, p.clean);
    const double s = ssim(out, p.clean);
    sum_in += pin;
    sum_out += pout;
    sum_ssim += s;
    char row[160];
    std::snprintf(row, sizeof row, "%s,%.6f,%.6f,%.6f\n", p.id.c_str(), pin,
                  pout, s);
    csv << row;
  }
  const double n = double(pairs.size());
  char row[160];
  std::snprintf(row, sizeof row, "mean,%.6f,%.6f,%.6f\n", sum_in / n,
                sum_out / n, sum_ssim / n);
  csv << row;
  std::printf("%zu pairs: %s", pairs.size(), row);
  return 0;
}

int cmd_gradcheck() {
  const auto results = run_verification();
  for (const auto& r : results)
    std::printf("%-26s max_rel_err %.3e  %s\n", r.name.c_str(), r.max_rel_err,
                r.pass ? "pass" : "FAIL");
  if (!all_passed(results)) {
    std::fprintf(stderr, "gradient verification failed\n");
    return 1;
  }
  std::printf("%zu checks passed\n", results.size());
  return 0;
}

int cmd_export_passbands(const std::string& ckpt, const std::string& out_dir) {
  Model m = load_checkpoint(ckpt);
  fs::create_directories(out_dir);
  const int p = m.cfg.p;
  int count = 0;
  visit_params(m, "", [&](const std::string& name, Tensor& t) {
    if (!name.ends_with("/passband")) return;
    std::string base = name;
    std::replace(base.begin(), base.end(), '/', '_');

    std::ofstream csv(fs::path(out_dir) / (base + ".csv"), std::ios::trunc);
    float maxv = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      maxv = std::max(maxv, t.data()[i]);
    for (int u = 0; u < p; ++u) {
      for (int v = 0; v < p; ++v)
        csv << (v ? "," : "") << t.data()[u * p + v];
      csv << "\n";
    }

    std::ofstream pgm(fs::path(out_dir) / (base + ".pgm"), std::ios::trunc);
    pgm << "P2\n" << p << " " << p << "\n255\n";
    for (int u = 0; u < p; ++u) {
      for (int v = 0; v < p; ++v) {
        const float x = maxv > 0 ? t.data()[u * p + v] / maxv : 0.0f;
        pgm << (v ? " " : "") << int(std::lround(x * 255.0f));
      }
      pgm << "\n";
    }
    ++count;
  });
  std::printf("wrote %d passbands to %s\n", count, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-scale bandpass CNN for image demoireing"};
  app.require_subcommand(1);

  std::string config_path, ckpt, in_path, out_path, data_dir, csv_path, out_dir;
  std::string ablate_mode;
  bool ensemble = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path, "run config JSON")->required();

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "run config JSON")->required();

  auto* infer = app.add_subcommand("infer", "demoire one image");
  infer->add_option("--ckpt", ckpt, "checkpoint file")->required();
  infer->add_option("--in", in_path, "input image")->required();
  infer->add_option("--out", out_path, "output image")->required();
  infer->add_flag("--self-ensemble", ensemble, "average four rotated runs");
  infer->add_option("--ablate", ablate_mode, "disable a component")
      ->check(CLI::IsMember({"no-lp", "no-mtrb"}));

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--ckpt", ckpt, "checkpoint file")->required();
  ev->add_option("--data", data_dir, "directory of *_moire/*_clean pairs")
      ->required();
  ev->add_option("--csv", csv_path, "metrics output")->required();

  app.add_subcommand("gradcheck", "finite-difference audit of all gradients");

  auto* ex = app.add_subcommand("export-passbands", "dump bandpass weights");
  ex->add_option("--ckpt", ckpt, "checkpoint file")->required();
  ex->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path);
    if (tr->parsed()) return cmd_train(config_path);
    if (infer->parsed())
      return cmd_infer(ckpt, in_path, out_path, ensemble, ablate_mode);
    if (ev->parsed()) return cmd_eval(ckpt, data_dir, csv_path);
    if (app.got_subcommand("gradcheck")) return cmd_gradcheck();
    if (ex->parsed()) return cmd_export_passbands(ckpt, out_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
