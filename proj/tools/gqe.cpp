// Command-line front end. Every failure ends with exactly one line on
// stderr of the form
//   error<TAB>code<TAB>detail
// and a nonzero exit status (2 for usage errors, 1 otherwise).

#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "gqe/checkpoint.hpp"
#include "gqe/color.hpp"
#include "gqe/distortion.hpp"
#include "gqe/enhance.hpp"
#include "gqe/error.hpp"
#include "gqe/metrics.hpp"
#include "gqe/patching.hpp"
#include "gqe/ply.hpp"
#include "gqe/synthetic.hpp"
#include "gqe/trainer.hpp"

namespace {

using namespace gqe;

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  return s;
}

int report(const std::string& code, const std::string& detail, int status) {
  std::cerr << "error\t" << code << '\t' << one_line(detail) << '\n';
  return status;
}

PlyEncoding encoding(bool ascii) { return ascii ? PlyEncoding::Ascii : PlyEncoding::BinaryLittleEndian; }

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v, const char* f = "%.6f") {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based quality enhancement for point-cloud colour"};
  app.require_subcommand(1);
  bool ascii = false;
  app.add_flag("--ascii", ascii, "Write ascii PLY instead of binary");

  // convert
  auto* convert = app.add_subcommand("convert", "Convert PLY colours between RGB and YCbCr (BT.709, full range)");
  std::string to, conv_in, conv_out;
  convert->add_option("--to", to, "Target space")->required()->check(CLI::IsMember({"rgb", "ycbcr"}));
  convert->add_option("input", conv_in)->required();
  convert->add_option("output", conv_out)->required();

  // distort
  auto* distort = app.add_subcommand("distort", "Apply synthetic codec-like colour damage");
  DistortionLevel level;
  std::optional<int> qp;
  bool distort_rgb = false;
  std::string dist_in, dist_out;
  distort->add_option("--step", level.quant_step, "Quantisation step")->check(CLI::PositiveNumber);
  distort->add_option("--smooth", level.smooth_strength, "kNN smoothing blend")->check(CLI::Range(0.0, 1.0));
  distort->add_option("--k", level.smooth_k, "Smoothing neighbourhood size")->check(CLI::PositiveNumber);
  distort->add_option("--noise", level.noise_sigma, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  distort->add_option("--seed", level.seed, "Noise seed");
  distort->add_option("--qp", qp, "Use the preset level for this QP (51 46 40 34 28 22)");
  distort->add_flag("--rgb", distort_rgb, "Damage RGB directly instead of YCbCr");
  distort->add_option("input", dist_in)->required();
  distort->add_option("output", dist_out)->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic textured surface");
  std::size_t side = 64;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  synth->add_option("--side", side, "Grid side length (about side^2 points)")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Texture seed");
  synth->add_option("output", synth_out)->required();

  // patch
  auto* patch = app.add_subcommand("patch", "Extract overlapping patches and write a manifest");
  std::size_t pn = 2048, pk = 20, pstart = 0;
  double pr = 2.0;
  std::string patch_in, patch_out;
  patch->add_option("--n", pn, "Points per patch")->check(CLI::PositiveNumber);
  patch->add_option("--r", pr, "Overlap ratio")->check(CLI::PositiveNumber);
  patch->add_option("--k", pk, "Graph neighbours (validated against n)")->check(CLI::PositiveNumber);
  patch->add_option("--start", pstart, "FPS start index");
  patch->add_option("input", patch_in)->required();
  patch->add_option("manifest", patch_out)->required();

  // train
  auto* trainc = app.add_subcommand("train", "Train one component model from a key = value config file");
  std::string train_cfg;
  trainc->add_option("config", train_cfg)->required();

  // enhance
  auto* enh = app.add_subcommand("enhance", "Enhance a distorted cloud with Y, Cb and Cr checkpoints");
  std::string ck_y, ck_cb, ck_cr, enh_in, enh_out;
  std::size_t workers = default_workers();
  enh->add_option("--y", ck_y, "Y checkpoint");
  enh->add_option("--cb", ck_cb, "Cb checkpoint");
  enh->add_option("--cr", ck_cr, "Cr checkpoint");
  enh->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  enh->add_option("input", enh_in)->required();
  enh->add_option("output", enh_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Print Y/Cb/Cr/YCbCr PSNR of a test cloud against a reference");
  std::string ref_path, test_path;
  eval->add_option("--ref", ref_path)->required();
  eval->add_option("--test", test_path)->required();

  // bd
  auto* bd = app.add_subcommand("bd", "Bjontegaard delta between two RD curves (bpip, dB)");
  std::string anchor_path, bd_test_path, mode = "psnr";
  bd->add_option("--anchor", anchor_path)->required();
  bd->add_option("--test", bd_test_path)->required();
  bd->add_option("--mode", mode)->check(CLI::IsMember({"psnr", "rate"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("Usage", e.what(), 2);
  }

  try {
    if (*convert) {
      PointCloud pc = read_ply(conv_in);
      if (to == "ycbcr") {
        pc = rgb_to_ycbcr(pc);
      } else {
        pc.color_space = ColorSpace::YCbCr8;  // files carry no tag; the input holds YCbCr values
        pc = ycbcr_to_rgb(pc);
      }
      write_ply(pc, conv_out, encoding(ascii));
    } else if (*distort) {
      if (qp) {
        const DistortionLevel preset = level_for_qp(*qp);
        level.quant_step = preset.quant_step;
        level.smooth_strength = preset.smooth_strength;
      }
      const PointCloud in = read_ply(dist_in);
      PointCloud out = distort_rgb ? apply_distortion(in, level) : ycbcr_to_rgb(apply_distortion(rgb_to_ycbcr(in), level));
      write_ply(out, dist_out, encoding(ascii));
    } else if (*synth) {
      write_ply(make_textured_surface(side, synth_seed), synth_out, encoding(ascii));
    } else if (*patch) {
      if (pk > pn) throw Error(ErrorCode::InvalidArgument, "k must not exceed n");
      const PointCloud pc = read_ply(patch_in);
      const PatchSet ps = extract_patches(pc, pn, pr, pstart, default_workers());
      write_patch_manifest(ps, patch_out);
      std::cout << "points\t" << pc.size() << "\npatches\t" << ps.size() << "\nuncovered\t" << count_uncovered(ps)
                << '\n';
    } else if (*trainc) {
      const TrainConfig cfg = load_train_config(train_cfg);
      if (cfg.checkpoint_out.empty()) throw Error(ErrorCode::ConfigError, "checkpoint_out is required");
      TrainHooks hooks;
      hooks.on_epoch = [](const EpochLog& e) {
        std::cout << e.epoch << '\t' << fmt(e.lr, "%.8g") << '\t' << fmt(e.mean_loss, "%.9g") << std::endl;
      };
      hooks.on_lr_boundary = [&](int epoch, const Checkpoint& c) {
        auto p = cfg.checkpoint_out;
        p.replace_extension(".epoch" + std::to_string(epoch) + p.extension().string());
        save_checkpoint(c, p);
      };
      std::cout << "epoch\tlr\tloss" << std::endl;
      save_checkpoint(train(cfg, nullptr, hooks), cfg.checkpoint_out);
    } else if (*enh) {
      std::array<std::optional<Checkpoint>, 3> ck;
      const std::string* paths[3] = {&ck_y, &ck_cb, &ck_cr};
      std::array<const Checkpoint*, 3> ptrs{};
      for (int c = 0; c < 3; ++c) {
        if (paths[c]->empty()) continue;
        ck[c] = load_checkpoint(*paths[c]);
        ptrs[c] = &*ck[c];
      }
      EnhanceOptions opts;
      opts.workers = workers;
      write_ply(enhance(ptrs, read_ply(enh_in), opts), enh_out, encoding(ascii));
    } else if (*eval) {
      const PointCloud ref = rgb_to_ycbcr(read_ply(ref_path));
      const PointCloud test = rgb_to_ycbcr(read_ply(test_path));
      const PsnrReport r = psnr_report(ref, test);
      std::cout << "component\tpsnr_db\nY\t" << fmt(r.y) << "\nCb\t" << fmt(r.cb) << "\nCr\t" << fmt(r.cr)
                << "\nYCbCr\t" << fmt(r.ycbcr) << '\n';
    } else if (*bd) {
      const double v = bd_metric(read_rd_curve_csv(anchor_path), read_rd_curve_csv(bd_test_path),
                                 mode == "rate" ? BdMode::Rate : BdMode::Psnr);
      std::cout << (mode == "rate" ? "bd_rate_percent\t" : "bd_psnr_db\t") << fmt(v) << '\n';
    }
  } catch (const Error& e) {
    return report(std::string(to_string(e.code())), e.detail(), 1);
  } catch (const std::exception& e) {
    return report("Internal", e.what(), 1);
  }
  return 0;
}
