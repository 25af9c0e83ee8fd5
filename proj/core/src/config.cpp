// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dpdmd/crc64.hpp"
#include "dpdmd/diffusion.hpp"
#include "dpdmd/error.hpp"

namespace dpdmd {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

std::uint32_t parse_u32(const std::string& key, const std::string& v) {
  const std::uint64_t x = parse_u64(key, v);
  if (x > std::numeric_limits<std::uint32_t>::max()) throw ConfigError(key + ": value too large");
  return static_cast<std::uint32_t>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::string body = trim(v);
  if (!body.empty() && body.front() == '[' && body.back() == ']') {
    body = body.substr(1, body.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(body);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
  return s;
}

template <typename E>
E parse_enum(const std::string& key, const std::string& v,
             std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    names += names.empty() ? name : std::string("|") + name;
  }
  throw ConfigError(key + ": expected one of " + names + ", got '" + v + "'");
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto size_field = [&](const std::string& k, auto member) {
      t[k] = {[member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
              [member](RunConfig& c, const std::string& key, const std::string& v) {
                member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(
                    parse_u64(key, v));
              }};
    };
    auto u32_field = [&](const std::string& k, auto member) {
      t[k] = {[member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
              [member](RunConfig& c, const std::string& key, const std::string& v) {
                member(c) = parse_u32(key, v);
              }};
    };
    auto real_field = [&](const std::string& k, auto member) {
      t[k] = {[member](const RunConfig& c) { return fmt_double(member(const_cast<RunConfig&>(c))); },
              [member](RunConfig& c, const std::string& key, const std::string& v) {
                member(c) = parse_double(key, v);
              }};
    };

    t["dataset"] = {[](const RunConfig& c) { return c.dataset; },
                    [](RunConfig& c, const std::string&, const std::string& v) { c.dataset = v; }};
    u32_field("net.input_dim", [](RunConfig& c) -> std::uint32_t& { return c.net.input_dim; });
    u32_field("net.hidden_width", [](RunConfig& c) -> std::uint32_t& { return c.net.hidden_width; });
    u32_field("net.depth", [](RunConfig& c) -> std::uint32_t& { return c.net.depth; });
    u32_field("net.time_embed_dim",
              [](RunConfig& c) -> std::uint32_t& { return c.net.time_embed_dim; });
    t["net.activation"] = {
        [](const RunConfig& c) { return std::string(to_string(c.net.activation)); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.net.activation =
              parse_enum<Activation>(k, v, {{"silu", Activation::kSilu}, {"tanh", Activation::kTanh}});
        }};
    size_field("teacher_steps", [](RunConfig& c) -> std::size_t& { return c.teacher_steps; });
    size_field("student_steps", [](RunConfig& c) -> std::size_t& { return c.dmd.student_steps; });
    size_field("dmd.fake_updates", [](RunConfig& c) -> std::size_t& { return c.dmd.fake_updates; });
    real_field("dmd.t_min", [](RunConfig& c) -> double& { return c.dmd.t_min; });
    real_field("dmd.t_max", [](RunConfig& c) -> double& { return c.dmd.t_max; });
    t["dmd.grad_normalization"] = {
        [](const RunConfig& c) { return std::string(to_string(c.dmd.normalization)); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.dmd.normalization = parse_enum<GradNormalization>(
              k, v, {{"none", GradNormalization::kNone}, {"mean-abs", GradNormalization::kMeanAbs}});
        }};
    t["dmd.t_sampling"] = {
        [](const RunConfig& c) { return std::string(c.dmd.per_sample_t ? "per-sample" : "per-batch"); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.dmd.per_sample_t = parse_enum<bool>(k, v, {{"per-sample", true}, {"per-batch", false}});
        }};
    t["dmd.detach_first_step"] = {
        [](const RunConfig& c) { return std::string(c.dmd.detach_first_step ? "true" : "false"); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.dmd.detach_first_step = parse_bool(k, v);
        }};
    size_field("dpdmd.anchor_step", [](RunConfig& c) -> std::size_t& { return c.anchor_step; });
    real_field("dpdmd.lambda", [](RunConfig& c) -> double& { return c.lambda_div; });
    size_field("training.teacher_iterations",
               [](RunConfig& c) -> std::uint64_t& { return c.training.teacher_iterations; });
    size_field("training.iterations",
               [](RunConfig& c) -> std::uint64_t& { return c.training.iterations; });
    size_field("training.batch_size",
               [](RunConfig& c) -> std::size_t& { return c.training.batch_size; });
    real_field("training.lr", [](RunConfig& c) -> double& { return c.training.lr; });
    real_field("training.student_lr", [](RunConfig& c) -> double& { return c.training.student_lr; });
    real_field("training.fake_lr", [](RunConfig& c) -> double& { return c.training.fake_lr; });
    t["training.student_lr_schedule"] = {
        [](const RunConfig& c) {
          return std::string(c.training.student_lr_cosine ? "cosine" : "constant");
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.training.student_lr_cosine =
              parse_enum<bool>(k, v, {{"constant", false}, {"cosine", true}});
        }};
    t["training.teacher_lr_schedule"] = {
        [](const RunConfig& c) {
          return std::string(c.training.teacher_lr_cosine ? "cosine" : "constant");
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.training.teacher_lr_cosine =
              parse_enum<bool>(k, v, {{"constant", false}, {"cosine", true}});
        }};
    real_field("training.lr_min_frac", [](RunConfig& c) -> double& { return c.training.lr_min_frac; });
    size_field("training.eval_interval",
               [](RunConfig& c) -> std::uint64_t& { return c.training.eval_interval; });
    size_field("eval.groups", [](RunConfig& c) -> std::size_t& { return c.eval.groups; });
    size_field("eval.group_size", [](RunConfig& c) -> std::size_t& { return c.eval.group_size; });
    real_field("eval.radius_sigmas", [](RunConfig& c) -> double& { return c.eval.radius_sigmas; });
    real_field("eval.min_frac", [](RunConfig& c) -> double& { return c.eval.min_frac; });
    t["eval.features"] = {
        [](const RunConfig& c) {
          return std::string(c.eval.feature_kind == metrics::FeatureMap::Kind::kRaw ? "raw"
                                                                                     : "projection");
        },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.eval.feature_kind = parse_enum<metrics::FeatureMap::Kind>(
              k, v,
              {{"raw", metrics::FeatureMap::Kind::kRaw},
               {"projection", metrics::FeatureMap::Kind::kRandomProjection}});
        }};
    size_field("eval.projection_dim",
               [](RunConfig& c) -> std::size_t& { return c.eval.projection_dim; });
    size_field("eval.teacher_samples",
               [](RunConfig& c) -> std::size_t& { return c.teacher_eval_samples; });
    size_field("diffusion.T", [](RunConfig& c) -> std::size_t& { return c.diffusion.T; });
    real_field("diffusion.alpha_bar_min",
               [](RunConfig& c) -> double& { return c.diffusion.alpha_bar_min; });
    t["sweep.axis"] = {[](const RunConfig& c) { return std::string(to_string(c.sweep.axis)); },
                       [](RunConfig& c, const std::string& k, const std::string& v) {
                         c.sweep.axis = parse_enum<SweepAxis>(
                             k, v, {{"K", SweepAxis::kAnchorStep}, {"lambda", SweepAxis::kLambda}});
                       }};
    t["sweep.values"] = {[](const RunConfig& c) { return fmt_list(c.sweep.values); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.sweep.values = parse_list(k, v);
                         }};
    size_field("seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; });
    t["mode"] = {[](const RunConfig& c) { return std::string(to_string(c.mode)); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.mode = parse_enum<Mode>(k, v, {{"flow", Mode::kFlow}, {"diffusion", Mode::kDiffusion}});
                 }};
    t["method"] = {[](const RunConfig& c) { return std::string(to_string(c.method)); },
                   [](RunConfig& c, const std::string& k, const std::string& v) {
                     c.method = parse_enum<Method>(k, v, {{"dmd", Method::kDmd}, {"dpdmd", Method::kDpdmd}});
                   }};
    t["output_dir"] = {[](const RunConfig& c) { return c.output_dir; },
                       [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }};
    t["teacher_checkpoint"] = {
        [](const RunConfig& c) { return c.teacher_checkpoint; },
        [](RunConfig& c, const std::string&, const std::string& v) { c.teacher_checkpoint = v; }};
    return t;
  }();
  return table;
}

bool is_path_key(const std::string& key) {
  return key == "output_dir" || key == "teacher_checkpoint";
}

void flatten(const nlohmann::json& j, const std::string& prefix, RunConfig& cfg) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, cfg);
    } else if (v.is_string()) {
      cfg.set(key, v.get<std::string>());
    } else if (v.is_array()) {
      std::string s;
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(key + ": list entries must be numbers");
        s += (s.empty() ? "" : ",") + fmt_double(e.get<double>());
      }
      cfg.set(key, s);
    } else if (v.is_boolean()) {
      cfg.set(key, v.get<bool>() ? "true" : "false");
    } else if (v.is_number_unsigned() || v.is_number_integer()) {
      if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
        // Negative integers are only meaningful for real-valued keys.
        cfg.set(key, fmt_double(v.get<double>()));
      } else {
        cfg.set(key, std::to_string(v.get<std::uint64_t>()));
      }
    } else if (v.is_number_float()) {
      cfg.set(key, fmt_double(v.get<double>()));
    } else {
      throw ConfigError(key + ": unsupported JSON value");
    }
  }
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::kFlow ? "flow" : "diffusion"; }
const char* to_string(SweepAxis a) { return a == SweepAxis::kAnchorStep ? "K" : "lambda"; }

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& t = fields();
  const auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, key, trim(value));
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

std::string RunConfig::hash() const {
  std::string text;
  for (const auto& [k, f] : fields()) {
    if (!is_path_key(k)) text += k + " = " + f.get(*this) + "\n";
  }
  return hex64(crc64(text));
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [k, f] : fields()) j[k] = f.get(*this);
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  try {
    (void)mixture();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  const NetConfig nc = net_config();
  nc.validate();
  if (mixture().dim() != nc.input_dim) {
    throw ConfigError("net.input_dim " + std::to_string(nc.input_dim) +
                      " does not match the dataset dimension " + std::to_string(mixture().dim()));
  }
  if (teacher_steps == 0) throw ConfigError("teacher_steps must be positive");
  dmd.validate();
  if (anchor_step == 0 || anchor_step > teacher_steps) {
    throw ConfigError("dpdmd.anchor_step must lie in [1, teacher_steps]");
  }
  if (!(lambda_div >= 0.0)) throw ConfigError("dpdmd.lambda must be nonnegative");
  if (training.batch_size == 0) throw ConfigError("training.batch_size must be positive");
  for (const auto& [name, lr] : {std::pair{"training.lr", training.lr},
                                 {"training.student_lr", training.student_lr},
                                 {"training.fake_lr", training.fake_lr}}) {
    if (!(lr > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  }
  if (!(training.lr_min_frac > 0.0 && training.lr_min_frac <= 1.0)) {
    throw ConfigError("training.lr_min_frac must lie in (0, 1]");
  }
  eval.validate();
  if (teacher_eval_samples == 0) throw ConfigError("eval.teacher_samples must be positive");
  if (mode == Mode::kDiffusion) {
    if (diffusion.T < std::max(teacher_steps, dmd.student_steps)) {
      throw ConfigError("diffusion.T must be at least the number of sampler steps");
    }
    if (!(diffusion.alpha_bar_min > 0.0 && diffusion.alpha_bar_min < 1.0)) {
      throw ConfigError("diffusion.alpha_bar_min must lie in (0, 1)");
    }
  }
  if (sweep.values.empty()) throw ConfigError("sweep.values must not be empty");
  for (double v : sweep.values) {
    if (sweep.axis == SweepAxis::kAnchorStep &&
        (v < 1.0 || v != std::floor(v) || v > static_cast<double>(teacher_steps))) {
      throw ConfigError("sweep.values: K entries must be integers in [1, teacher_steps]");
    }
    if (sweep.axis == SweepAxis::kLambda && !(v >= 0.0)) {
      throw ConfigError("sweep.values: lambda entries must be nonnegative");
    }
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

MixtureSpec RunConfig::mixture() const { return MixtureSpec::parse(dataset); }

NetConfig RunConfig::net_config() const {
  NetConfig c = net;
  c.prediction_mode = mode == Mode::kFlow ? PredictionMode::kVelocity : PredictionMode::kEpsilon;
  return c;
}

std::unique_ptr<Process> RunConfig::make_process() const {
  if (mode == Mode::kFlow) return std::make_unique<FlowProcess>(dmd.student_steps, teacher_steps);
  return std::make_unique<diffusion::DiffusionProcess>(
      diffusion::DiffusionSchedule::cosine(diffusion.T, diffusion.alpha_bar_min),
      dmd.student_steps, teacher_steps);
}

DistillSettings RunConfig::distill_settings() const {
  DistillSettings s;
  s.method = method;
  s.dmd = dmd;
  s.anchor_step = anchor_step;
  s.lambda_div = lambda_div;
  s.batch_size = training.batch_size;
  s.student_opt.lr = training.student_lr;
  s.fake_opt.lr = training.fake_lr;
  s.student_lr_decay = training.student_lr_cosine ? training.iterations : 0;
  s.student_lr_min_frac = training.lr_min_frac;
  return s;
}

std::filesystem::path RunConfig::teacher_path() const {
  if (!teacher_checkpoint.empty()) return teacher_checkpoint;
  return std::filesystem::path(output_dir) / "teacher.ckpt";
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config JSON: ") + e.what());
    }
    flatten(j, "", base);
    return base;
  }
  std::stringstream ss(text);
  std::size_t lineno = 0;
  for (std::string line; std::getline(ss, line);) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace dpdmd
