#include "canonica/fields/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "canonica/errors.hpp"

namespace canonica::fields {

namespace {

constexpr char kMagic[8] = {'C', 'N', 'C', 'K', 'P', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_matrix(std::string& out, const ad::Matrix& m) {
  for (ad::Index r = 0; r < m.rows(); ++r) {
    for (ad::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  ad::Matrix get_matrix(std::uint32_t rows, std::uint32_t cols) {
    ad::Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = get<double>();
    }
    return m;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const SceneModel& model) {
  std::string out(kMagic, sizeof(kMagic));
  const std::string header = to_kv(model.config).to_text();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  put<std::int64_t>(out, model.iteration);
  put<std::int64_t>(out, model.params.step());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& p : model.params.all()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.cols()));
    put_matrix(out, p.value);
    put_matrix(out, p.adam_m);
    put_matrix(out, p.adam_v);
  }
  return out;
}

SceneModel deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto header_len = in.get<std::uint32_t>();
  const KeyValues header = KeyValues::parse(in.get_bytes(header_len), "checkpoint header");
  SceneModel model = SceneModel::create(model_config_from_kv(header));
  model.iteration = in.get<std::int64_t>();
  const auto adam_step = in.get<std::int64_t>();
  const auto count = in.get<std::uint32_t>();
  if (count != model.params.size()) {
    throw DataError("checkpoint has " + std::to_string(count) + " parameters, config implies " +
                    std::to_string(model.params.size()));
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = in.get<std::uint32_t>();
    const std::string name = in.get_bytes(name_len);
    const auto id = model.params.find(name);
    if (!id) throw DataError("checkpoint parameter '" + name + "' unknown to this config");
    const auto rows = in.get<std::uint32_t>();
    const auto cols = in.get<std::uint32_t>();
    ad::Parameter& p = model.params.at(*id);
    if (rows != p.value.rows() || cols != p.value.cols()) {
      throw DataError("checkpoint parameter '" + name + "' has the wrong shape");
    }
    p.value = in.get_matrix(rows, cols);
    p.adam_m = in.get_matrix(rows, cols);
    p.adam_v = in.get_matrix(rows, cols);
  }
  if (!in.done()) throw DataError("trailing bytes after checkpoint payload");
  model.params.set_step(adam_step);
  return model;
}

void save_checkpoint(const SceneModel& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

SceneModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace canonica::fields
