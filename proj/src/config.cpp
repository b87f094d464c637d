#include "md/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "md/io.hpp"

namespace md {

namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(parse_u64(key, text));
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(parse_size(key, text.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string format_list(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename M>
Field size_field(M member) {
  return {[member](const RunConfig& c) { return std::to_string(member(c)); },
          [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_size(k, v); }};
}

template <typename M>
Field u64_field(M member) {
  return {[member](const RunConfig& c) { return std::to_string(member(c)); },
          [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_u64(k, v); }};
}

template <typename M>
Field double_field(M member) {
  return {[member](const RunConfig& c) { return format_double(member(c)); },
          [member](RunConfig& c, const std::string& k, const std::string& v) { member(c) = parse_double(k, v); }};
}

#define MD_SIZE(expr) size_field([](auto& c) -> auto& { return c.expr; })
#define MD_U64(expr) u64_field([](auto& c) -> auto& { return c.expr; })
#define MD_DOUBLE(expr) double_field([](auto& c) -> auto& { return c.expr; })

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["preset"] = {[](const RunConfig& c) { return c.preset; },
                   [](RunConfig& c, const std::string&, const std::string& v) {
                     RunConfig::from_preset(v);
                     c.preset = v;
                   }};

    t["vision.image_size"] = MD_SIZE(model.vision.image_size);
    t["vision.patch_size"] = MD_SIZE(model.vision.patch_size);
    t["vision.width"] = MD_SIZE(model.vision.width);
    t["vision.layers"] = MD_SIZE(model.vision.layers);
    t["vision.heads"] = MD_SIZE(model.vision.heads);
    t["vision.mlp_dim"] = MD_SIZE(model.vision.mlp_dim);
    t["vision.tap_layers"] = {[](const RunConfig& c) { return format_list(c.model.vision.tap_layers); },
                              [](RunConfig& c, const std::string& k, const std::string& v) {
                                c.model.vision.tap_layers = parse_list(k, v);
                              }};

    t["text.width"] = MD_SIZE(model.text.width);
    t["text.layers"] = MD_SIZE(model.text.layers);
    t["text.heads"] = MD_SIZE(model.text.heads);
    t["text.mlp_dim"] = MD_SIZE(model.text.mlp_dim);
    t["text.max_positions"] = MD_SIZE(model.text.max_positions);
    t["text.proj_dim"] = MD_SIZE(model.text.proj_dim);

    t["mirror.tokens"] = MD_SIZE(model.mirror_tokens);
    t["model.seed"] = MD_U64(model.seed);

    t["decoder.width"] = MD_SIZE(model.decoder.width);
    t["decoder.blocks"] = MD_SIZE(model.decoder.blocks);
    t["decoder.heads"] = MD_SIZE(model.decoder.heads);
    t["decoder.mlp_dim"] = MD_SIZE(model.decoder.mlp_dim);
    t["decoder.film_count"] = MD_SIZE(model.decoder.film_count);
    t["decoder.proj_in_dim"] = MD_SIZE(model.decoder.proj_in_dim);
    t["decoder.cond_dim"] = MD_SIZE(model.decoder.cond_dim);
    t["decoder.deconv_mid"] = MD_SIZE(model.decoder.deconv_mid);
    t["decoder.film_gain"] = MD_DOUBLE(model.decoder.film_gain);
    t["decoder.conditioning"] = {[](const RunConfig& c) { return to_string(c.model.decoder.conditioning); },
                                 [](RunConfig& c, const std::string&, const std::string& v) {
                                   c.model.decoder.conditioning = parse_conditioning(v);
                                 }};

    t["loss.lambda"] = MD_DOUBLE(train.loss.lambda);
    t["loss.alpha"] = MD_DOUBLE(train.loss.alpha);
    t["loss.min_depth"] = MD_DOUBLE(train.loss.min_depth);
    t["loss.max_depth"] = MD_DOUBLE(train.loss.max_depth);

    t["optim.lr"] = MD_DOUBLE(train.optim.lr);
    t["optim.weight_decay"] = MD_DOUBLE(train.optim.weight_decay);
    t["optim.beta1"] = MD_DOUBLE(train.optim.beta1);
    t["optim.beta2"] = MD_DOUBLE(train.optim.beta2);
    t["optim.eps"] = MD_DOUBLE(train.optim.eps);
    t["optim.eta_min"] = MD_DOUBLE(train.optim.eta_min);
    t["optim.epochs"] = MD_SIZE(train.optim.epochs);
    t["optim.batch_size"] = MD_SIZE(train.optim.batch_size);

    t["train.seed"] = MD_U64(train.seed);
    t["train.mirror_mode"] = {[](const RunConfig& c) { return to_string(c.train.mirror_mode); },
                              [](RunConfig& c, const std::string&, const std::string& v) {
                                c.train.mirror_mode = parse_mirror_mode(v);
                              }};
    t["train.eval_each_epoch"] = {[](const RunConfig& c) { return std::string(c.train.eval_each_epoch ? "true" : "false"); },
                                  [](RunConfig& c, const std::string& k, const std::string& v) {
                                    c.train.eval_each_epoch = parse_bool(k, v);
                                  }};

    t["eval.crop"] = {[](const RunConfig& c) { return to_string(c.eval.crop.kind); },
                      [](RunConfig& c, const std::string&, const std::string& v) { c.eval.crop = CropSpec::parse(v); }};
    t["eval.min_depth"] = MD_DOUBLE(eval.min_depth);
    t["eval.max_depth"] = MD_DOUBLE(eval.max_depth);
    t["eval.resolution"] = {[](const RunConfig& c) { return to_string(c.eval.resolution); },
                            [](RunConfig& c, const std::string&, const std::string& v) {
                              c.eval.resolution = parse_eval_resolution(v);
                            }};

    t["data.dir"] = {[](const RunConfig& c) { return c.data_dir; },
                     [](RunConfig& c, const std::string&, const std::string& v) { c.data_dir = v; }};
    t["data.seed"] = MD_U64(data.seed);
    t["data.scenes"] = MD_SIZE(data.scenes);
    t["data.frames_per_scene"] = MD_SIZE(data.frames_per_scene);
    t["data.height"] = MD_SIZE(data.height);
    t["data.width"] = MD_SIZE(data.width);
    t["data.min_objects"] = MD_SIZE(data.min_objects);
    t["data.max_objects"] = MD_SIZE(data.max_objects);
    t["data.forward_step"] = MD_DOUBLE(data.forward_step);
    t["data.lateral_step"] = MD_DOUBLE(data.lateral_step);
    t["data.yaw_step"] = MD_DOUBLE(data.yaw_step);

    t["consistency.window"] = MD_SIZE(consistency_window);
    t["consistency.edge_threshold"] = MD_DOUBLE(consistency_edge_threshold);
    return t;
  }();
  return table;
}

#undef MD_SIZE
#undef MD_U64
#undef MD_DOUBLE

const Field& field(const std::string& key) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

}  // namespace

RunConfig RunConfig::from_preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "paper") {
    c.model = ModelConfig::paper();
    return c;
  }
  if (name == "toy") {
    c.model = ModelConfig::toy();
    c.train.optim.lr = 0.01;
    c.train.optim.batch_size = 4;
    c.train.optim.epochs = 250;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (expected toy or paper)");
}

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

void RunConfig::apply(const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not key=value");
    set(item.substr(0, eq), item.substr(eq + 1));
  }
}

void RunConfig::validate() const {
  model.validate();
  train.optim.validate();
  train.loss.validate();
  eval.crop.validate();
  if (!(eval.min_depth > 0.0 && eval.min_depth < eval.max_depth)) {
    throw ConfigError("eval depth range must satisfy 0 < min_depth < max_depth");
  }
  if (data_dir.empty()) {
    if (data.scenes == 0 || data.frames_per_scene == 0 || data.height == 0 || data.width == 0) {
      throw ConfigError("data: scenes, frames and image size must be positive");
    }
    if (data.min_objects > data.max_objects) throw ConfigError("data.min_objects exceeds data.max_objects");
  }
  if (consistency_window == 0) throw ConfigError("consistency.window must be positive");
}

std::string RunConfig::resolved() const {
  std::string out = "preset=" + preset + "\n";
  for (const auto& [key, f] : fields()) {
    if (key != "preset") out += key + "=" + f.get(*this) + "\n";
  }
  return out;
}

RunConfig RunConfig::parse_resolved(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string preset = "toy";
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    if (line.rfind("preset=", 0) == 0) preset = line.substr(7);
    lines.push_back(line);
  }
  RunConfig c = from_preset(preset);
  c.apply(lines);
  return c;
}

RunConfig RunConfig::load_resolved(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return parse_resolved(std::string(bytes.begin(), bytes.end()));
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> k;
    for (const auto& [key, f] : fields()) k.push_back(key);
    return k;
  }();
  return all;
}

}  // namespace md
