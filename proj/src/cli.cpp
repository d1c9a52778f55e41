#include "unifield/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "unifield/config.hpp"
#include "unifield/flow.hpp"
#include "unifield/metrics.hpp"
#include "unifield/nifti.hpp"
#include "unifield/preprocess.hpp"
#include "unifield/seed.hpp"
#include "unifield/synth.hpp"
#include "unifield/velocity_net.hpp"

namespace fs = std::filesystem;

namespace unifield {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : ""));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kManifestHeader = "id,split,task,modality,lf_path,hf_path";

PairedItem load_item(const ManifestRow& row, const fs::path& base) {
  PairedItem item{row.id, read_nifti(base / row.lf_path).volume,
                  read_nifti(base / row.hf_path).volume, row.task};
  require_same_shape(item.lf.shape(), item.hf.shape(), ("pair " + row.id).c_str());
  return item;
}

// ---- generate -------------------------------------------------------------

void cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const long n = cfg.integer("generate.n");
  if (n < 1) throw ConfigError("generate.n must be >= 1");
  std::vector<Modality> mods;
  for (const auto& m : cfg.list("generate.modalities")) {
    try {
      mods.push_back(parse_modality(m));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  const auto tasks = cfg.list("generate.tasks");
  const PairedDataset ds = make_paired_dataset(std::size_t(n), cfg.shape("generate.shape"), tasks,
                                               cfg.seed(), mods, cfg.phantom());
  if (ds.train.empty()) throw ConfigError("dataset too small to split");

  const fs::path root = cfg.out_dir();
  ensure_dir(root / "train");
  ensure_dir(root / "test");
  std::vector<bool> is_test(ds.items.size(), false);
  for (auto i : ds.test) is_test[i] = true;

  std::ostringstream manifest;
  manifest << kManifestHeader << "\n";
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const PairedItem& it = ds.items[i];
    const std::string split = is_test[i] ? "test" : "train";
    const fs::path lf = fs::path(split) / (it.id + "_lf.nii");
    const fs::path hf = fs::path(split) / (it.id + "_hf.nii");
    write_nifti(it.lf, root / lf);
    write_nifti(it.hf, root / hf);
    manifest << it.id << "," << split << "," << it.task.transition() << ","
             << to_string(it.task.modality()) << "," << lf.generic_string() << ","
             << hf.generic_string() << "\n";
  }
  write_text(cfg.manifest_path(), manifest.str());
  out << "generated " << ds.train.size() << " train + " << ds.test.size() << " test pairs in "
      << root.string() << "\n";
}

// ---- preprocess -----------------------------------------------------------

void cmd_preprocess(const RunConfig& cfg, const fs::path& in, const fs::path& dst,
                    std::ostream& out) {
  const NiftiVolume src = read_nifti(in);
  const Volume3D v = preprocess(src.volume, cfg.preprocess());
  write_nifti(v, dst, &src.header);
  out << "preprocessed " << in.string() << " " << src.volume.shape().str() << " -> "
      << dst.string() << " " << v.shape().str() << "\n";
}

// ---- train ----------------------------------------------------------------

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const fs::path manifest = cfg.manifest_path();
  const auto rows = read_manifest(manifest);
  std::vector<PairedItem> items;
  for (const auto& r : rows)
    if (r.split == "train") items.push_back(load_item(r, manifest.parent_path()));
  if (items.empty()) throw ConfigError("manifest " + manifest.string() + " has no train rows");

  ModelConfig mc = cfg.model();
  mc.volume_shape = items.front().hf.shape();
  const TrainConfig tc = cfg.train();
  VelocityModel model(mc, splitmix(tc.seed));
  const TrainingLog log = train(model, items, tc, cfg.fasrm());

  ensure_dir(cfg.checkpoint_path().parent_path().empty() ? fs::path(".")
                                                          : cfg.checkpoint_path().parent_path());
  save_checkpoint(model, cfg.checkpoint_path());
  std::ostringstream csv;
  csv << "iter,total,spatial_l1,freq_low,freq_mid,freq_high,lr\n";
  for (const auto& r : log) {
    csv << r.iter << "," << format_real(r.loss.total) << "," << format_real(r.loss.spatial_l1);
    for (double f : r.loss.freq_per_band) csv << "," << format_real(f);
    csv << "," << format_real(r.lr) << "\n";
  }
  write_text(cfg.out_dir() / "loss.csv", csv.str());
  out << "trained " << log.size() << " iterations on " << items.size() << " pairs; final loss "
      << format_real(log.empty() ? 0.0 : log.back().loss.total) << "\n";
}

// ---- enhance --------------------------------------------------------------

void require_model_shape(const VelocityModel& model, const Shape& input) {
  const Shape& trained = model.config().volume_shape;
  if (trained.nx != 0 && !(trained == input))
    throw InvalidArgument("shape mismatch: checkpoint expects " + trained.str() + ", input is " +
                          input.str());
}

void cmd_enhance(const RunConfig& cfg, const fs::path& in, const fs::path& dst,
                 const std::string& task_text, bool dump_slices, std::ostream& out) {
  const FieldTask task = FieldTask::parse(task_text);
  const VelocityModel model = load_checkpoint(cfg.checkpoint_path());
  const NiftiVolume src = read_nifti(in);
  require_model_shape(model, src.volume.shape());
  const Volume3D y = euler_enhance(model, src.volume, task, cfg.sampler());
  if (!dst.parent_path().empty()) ensure_dir(dst.parent_path());
  write_nifti(y, dst, &src.header);
  if (dump_slices) {
    const fs::path stem = dst.parent_path() / dst.stem();
    write_text(stem.string() + "_input_mid.pgm", encode_mid_slice_pgm(src.volume));
    write_text(stem.string() + "_output_mid.pgm", encode_mid_slice_pgm(y));
  }
  out << "enhanced " << in.string() << " (" << task.prompt() << ") -> " << dst.string() << "\n";
}

// ---- evaluate -------------------------------------------------------------

struct MetricRow {
  std::string id, task, modality;
  MetricsReport m;
};

void put_row(std::ostringstream& csv, const MetricRow& r) {
  csv << r.id << "," << r.task << "," << r.modality << "," << format_real(r.m.nrmse_pct) << ","
      << format_real(r.m.psnr_db) << "," << format_real(r.m.ssim_pct) << "\n";
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const fs::path manifest = cfg.manifest_path();
  auto rows = read_manifest(manifest);
  std::erase_if(rows, [](const ManifestRow& r) { return r.split != "test"; });
  if (rows.empty()) throw ConfigError("manifest " + manifest.string() + " has no test rows");
  std::sort(rows.begin(), rows.end(),
            [](const ManifestRow& a, const ManifestRow& b) { return a.id < b.id; });

  const VelocityModel model = load_checkpoint(cfg.checkpoint_path());
  const SamplerConfig base = cfg.sampler();
  ensure_dir(cfg.out_dir() / "enhanced");

  std::vector<MetricRow> enhanced, baseline;
  for (const auto& r : rows) {
    const PairedItem item = load_item(r, manifest.parent_path());
    require_model_shape(model, item.lf.shape());
    SamplerConfig sc = base;
    sc.seed = volume_seed(base.seed, r.id);
    const Volume3D y = euler_enhance(model, item.lf, item.task, sc);
    write_nifti(y, cfg.out_dir() / "enhanced" / (r.id + ".nii"));
    const std::string tr = r.task.transition();
    const std::string mod(to_string(r.task.modality()));
    enhanced.push_back({r.id, tr, mod, evaluate_metrics(y, item.hf)});
    baseline.push_back({r.id + "@input", tr, mod, evaluate_metrics(item.lf, item.hf)});
  }

  std::ostringstream csv;
  csv << "id,task,modality,nrmse_pct,psnr_db,ssim_pct\n";
  for (std::size_t i = 0; i < enhanced.size(); ++i) {
    put_row(csv, enhanced[i]);
    put_row(csv, baseline[i]);
  }
  std::map<std::string, std::pair<std::vector<MetricRow>*, std::vector<std::size_t>>> by_task;
  std::vector<std::string> task_order;
  for (std::size_t i = 0; i < enhanced.size(); ++i) {
    auto& slot = by_task[enhanced[i].task];
    if (slot.second.empty()) task_order.push_back(enhanced[i].task);
    slot.second.push_back(i);
  }
  std::sort(task_order.begin(), task_order.end());
  for (const auto& tr : task_order) {
    const auto& idx = by_task[tr].second;
    for (const auto* src : {&enhanced, &baseline}) {
      MetricsReport mean;
      for (auto i : idx) {
        mean.nrmse_pct += (*src)[i].m.nrmse_pct;
        mean.psnr_db += (*src)[i].m.psnr_db;
        mean.ssim_pct += (*src)[i].m.ssim_pct;
      }
      const double k = double(idx.size());
      mean = {mean.nrmse_pct / k, mean.psnr_db / k, mean.ssim_pct / k};
      const MetricRow row{src == &enhanced ? "mean" : "mean@input", tr, "all", mean};
      put_row(csv, row);
      out << tr << " " << row.id << ": NRMSE " << format_real(mean.nrmse_pct) << "%  PSNR "
          << format_real(mean.psnr_db) << " dB  SSIM " << format_real(mean.ssim_pct) << "%\n";
    }
  }
  write_text(cfg.out_dir() / "metrics.csv", csv.str());
}

}  // namespace

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kManifestHeader)
    throw IoError("manifest " + path.string() + " has an unexpected header");
  std::vector<ManifestRow> rows;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (c.size() != 6) throw IoError(where + ": expected 6 columns");
    if (c[1] != "train" && c[1] != "test") throw IoError(where + ": bad split '" + c[1] + "'");
    try {
      rows.push_back({c[0], c[1], FieldTask::parse(c[3] + ":" + c[2]), c[4], c[5]});
    } catch (const InvalidArgument& e) {
      throw IoError(where + ": " + e.what());
    }
  }
  return rows;
}

std::string encode_mid_slice_pgm(const Volume3D& v) {
  const Shape& s = v.shape();
  std::string pgm = "P5 " + std::to_string(s.nx) + " " + std::to_string(s.ny) + " 255\n";
  const std::size_t z = s.nz / 2;
  for (std::size_t y = 0; y < s.ny; ++y)
    for (std::size_t x = 0; x < s.nx; ++x) {
      const double c = std::clamp(v.at(x, y, z), 0.0, 1.0);
      pgm.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * c))));
    }
  return pgm;
}

std::uint64_t volume_seed(std::uint64_t seed, const std::string& id) {
  return splitmix(seed ^ fnv1a(id));
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"unifield: field-strength enhancement of 3D MRI volumes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, seed_text;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed_text, "global seed (u64)");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--set", overrides, "extra key=value override (repeatable)");

  auto* gen = app.add_subcommand("generate", "write synthetic paired phantoms and a manifest");

  auto* pre = app.add_subcommand("preprocess", "normalize, resample and resize one volume");
  std::string pre_in, pre_out, plo, phi, target_z, target_shape;
  pre->add_option("--in", pre_in, "input NIfTI")->required();
  pre->add_option("--out", pre_out, "output NIfTI")->required();
  pre->add_option("--plo", plo, "lower clip percentile");
  pre->add_option("--phi", phi, "upper clip percentile");
  pre->add_option("--target-z-mm", target_z, "output z spacing in mm");
  pre->add_option("--target-shape", target_shape, "nx,ny,nz");

  auto* trn = app.add_subcommand("train", "train the velocity network from the manifest");

  auto* enh = app.add_subcommand("enhance", "enhance one volume with a checkpoint");
  std::string enh_ckpt, enh_in, enh_out, enh_task, enh_steps;
  bool dump_slices = false;
  enh->add_option("--checkpoint", enh_ckpt, "checkpoint path");
  enh->add_option("--in", enh_in, "input NIfTI")->required();
  enh->add_option("--out", enh_out, "output NIfTI")->required();
  enh->add_option("--task", enh_task, "e.g. T1:64mT_to_3T")->required();
  enh->add_option("--steps", enh_steps, "Euler steps");
  enh->add_flag("--dump-slices", dump_slices, "write axial mid-slice PGMs");

  auto* evl = app.add_subcommand("evaluate", "enhance the test split and write metrics.csv");
  std::string evl_ckpt, evl_manifest;
  evl->add_option("--checkpoint", evl_ckpt, "checkpoint path");
  evl->add_option("--manifest", evl_manifest, "manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::from_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed_text.empty()) cfg.set("seed", seed_text);
    if (!out_dir.empty()) cfg.set("out_dir", out_dir);
    cfg.seed();  // validate early

    auto set_if = [&cfg](const std::string& key, const std::string& v) {
      if (!v.empty()) cfg.set(key, v);
    };
    set_if("preprocess.plo", plo);
    set_if("preprocess.phi", phi);
    set_if("preprocess.target_z_mm", target_z);
    set_if("preprocess.target_shape", target_shape);
    set_if("sampler.steps", enh_steps);
    set_if("checkpoint", enh_ckpt);
    set_if("checkpoint", evl_ckpt);
    set_if("manifest", evl_manifest);

    ensure_dir(cfg.out_dir());
    cfg.write_resolved(cfg.out_dir());

    if (*gen) cmd_generate(cfg, out);
    else if (*pre) cmd_preprocess(cfg, pre_in, pre_out, out);
    else if (*trn) cmd_train(cfg, out);
    else if (*enh) cmd_enhance(cfg, enh_in, enh_out, enh_task, dump_slices, out);
    else if (*evl) cmd_evaluate(cfg, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergedError& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace unifield
