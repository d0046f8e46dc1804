#include "rareda/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "rareda/numcore/rng.hpp"

namespace rareda {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'R', 'A', 'R', 'E', 'D', 'A', 'C', 'K'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void put_raw(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw Error("checkpoint: unexpected end of data");
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint_path) {
  auto p = checkpoint_path;
  p += ".json";
  return p;
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put(kCheckpointVersion);
  w.put(cp.config_hash);
  w.put(static_cast<std::uint64_t>(cp.epoch));
  w.put(static_cast<std::uint32_t>(cp.metrics.size()));
  for (const auto& [name, value] : cp.metrics) {
    w.put_string(name);
    w.put(value);
  }
  for (Part p : {Part::features, Part::classifier, Part::discriminator}) {
    const auto& mlp = cp.params.part(p);
    w.put(static_cast<std::uint8_t>(mlp.spec.activation));
    w.put(static_cast<std::uint8_t>(mlp.spec.activate_output ? 1 : 0));
    w.put(static_cast<std::uint32_t>(mlp.layers.size()));
  }
  struct NamedArray {
    std::string name;
    const Matrix* value;
  };
  std::vector<NamedArray> arrays;
  for (Part p : {Part::features, Part::classifier, Part::discriminator}) {
    const auto& layers = cp.params.part(p).layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string base = part_prefix(p) + "." + std::to_string(l);
      arrays.push_back({base + ".weight", &layers[l].weight});
      arrays.push_back({base + ".bias", &layers[l].bias});
    }
  }
  w.put(static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    w.put_string(a.name);
    w.put(static_cast<std::uint32_t>(a.value->rows()));
    w.put(static_cast<std::uint32_t>(a.value->cols()));
    w.put_raw(reinterpret_cast<const char*>(a.value->values().data()),
              a.value->size() * sizeof(double));
  }
  w.put(fnv1a64(w.bytes()));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint '" + path.string() + "' for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
  }

  nlohmann::json meta{{"format", "rareda-checkpoint"},
                      {"version", kCheckpointVersion},
                      {"config_hash", cp.config_hash},
                      {"epoch", cp.epoch},
                      {"metrics", nlohmann::json::object()},
                      {"arrays", nlohmann::json::array()}};
  for (const auto& [name, value] : cp.metrics) meta["metrics"][name] = value;
  for (const auto& a : arrays) {
    meta["arrays"].push_back({{"name", a.name}, {"rows", a.value->rows()}, {"cols", a.value->cols()}});
  }
  std::ofstream side(sidecar_path(path));
  if (!side) throw Error("cannot write checkpoint sidecar for '" + path.string() + "'");
  side << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kMinSize = sizeof(kMagic) + 4 + 8 + 8 + 4 + 3 * 6 + 4 + 8;
  if (bytes.size() < kMinSize) throw Error("checkpoint '" + path.string() + "' is truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error("'" + path.string() + "' is not a checkpoint file");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));

  Reader r(bytes, body);
  char magic[8];
  r.get_raw(magic, sizeof(magic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint '" + path.string() + "' has format version " +
                std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
  }
  if (fnv1a64(std::string_view(bytes.data(), body)) != stored) {
    throw Error("checkpoint '" + path.string() + "' is corrupt or truncated (checksum mismatch)");
  }

  Checkpoint cp;
  cp.config_hash = r.get<std::uint64_t>();
  cp.epoch = static_cast<std::size_t>(r.get<std::uint64_t>());
  const auto n_metrics = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_metrics; ++i) {
    std::string name = r.get_string();
    const double v = r.get<double>();
    cp.metrics.emplace_back(std::move(name), v);
  }
  struct PartHeader {
    Activation activation;
    bool activate_output;
    std::uint32_t layers;
  };
  PartHeader headers[3];
  for (auto& h : headers) {
    const auto act = r.get<std::uint8_t>();
    if (act > static_cast<std::uint8_t>(Activation::identity)) {
      throw Error("checkpoint: unknown activation code " + std::to_string(act));
    }
    h.activation = static_cast<Activation>(act);
    h.activate_output = r.get<std::uint8_t>() != 0;
    h.layers = r.get<std::uint32_t>();
    if (h.layers == 0) throw Error("checkpoint: part with zero layers");
  }
  const auto n_arrays = r.get<std::uint32_t>();
  const std::uint32_t expected_arrays = 2 * (headers[0].layers + headers[1].layers + headers[2].layers);
  if (n_arrays != expected_arrays) throw Error("checkpoint: array count does not match layer table");

  const Part parts[3] = {Part::features, Part::classifier, Part::discriminator};
  for (int pi = 0; pi < 3; ++pi) {
    Mlp& mlp = cp.params.part(parts[pi]);
    for (std::uint32_t l = 0; l < headers[pi].layers; ++l) {
      DenseLayer layer;
      for (int which = 0; which < 2; ++which) {
        const std::string expected_name = part_prefix(parts[pi]) + "." + std::to_string(l) +
                                          (which == 0 ? ".weight" : ".bias");
        const std::string name = r.get_string();
        if (name != expected_name) {
          throw Error("checkpoint: expected array '" + expected_name + "', found '" + name + "'");
        }
        const auto rows = r.get<std::uint32_t>();
        const auto cols = r.get<std::uint32_t>();
        Matrix m(rows, cols);
        r.get_raw(reinterpret_cast<char*>(m.values().data()), m.size() * sizeof(double));
        (which == 0 ? layer.weight : layer.bias) = std::move(m);
      }
      if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols()) {
        throw Error("checkpoint: bias shape does not match weight in layer " + std::to_string(l));
      }
      if (!mlp.layers.empty() && mlp.layers.back().weight.cols() != layer.weight.rows()) {
        throw Error("checkpoint: layer shapes do not chain");
      }
      layer.grad_weight = Matrix(layer.weight.rows(), layer.weight.cols());
      layer.grad_bias = Matrix(1, layer.bias.cols());
      mlp.layers.push_back(std::move(layer));
    }
    mlp.spec.activation = headers[pi].activation;
    mlp.spec.activate_output = headers[pi].activate_output;
    mlp.spec.input_dim = mlp.layers.front().weight.rows();
    mlp.spec.output_dim = mlp.layers.back().weight.cols();
    for (std::size_t l = 0; l + 1 < mlp.layers.size(); ++l) {
      mlp.spec.hidden_dims.push_back(mlp.layers[l].weight.cols());
    }
  }
  if (!r.done()) throw Error("checkpoint: trailing bytes after parameter arrays");
  NetworkSpec{cp.params.features.spec, cp.params.classifier.spec, cp.params.discriminator.spec}
      .validate();
  return cp;
}

std::optional<std::string> config_hash_warning(const Checkpoint& cp, std::uint64_t expected) {
  if (cp.config_hash == expected) return std::nullopt;
  std::ostringstream os;
  os << "checkpoint config hash " << std::hex << cp.config_hash << " differs from current config "
     << expected;
  return os.str();
}

}  // namespace rareda
