#include "model_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace homlab {

namespace {

void AppendU32(std::vector<uint8_t>& buf, uint32_t v) {
  buf.push_back(static_cast<uint8_t>(v & 0xFF));
  buf.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
  buf.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
  buf.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

void AppendF32(std::vector<uint8_t>& buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  AppendU32(buf, bits);
}

class Reader {
 public:
  Reader(const uint8_t* data, size_t n) : data_(data), n_(n) {}

  uint32_t U32() {
    if (pos_ + 4 > n_) {
      Fail(ErrorKind::kChecksumMismatch, "weight file truncated");
    }
    const uint32_t v = static_cast<uint32_t>(data_[pos_]) |
                       (static_cast<uint32_t>(data_[pos_ + 1]) << 8) |
                       (static_cast<uint32_t>(data_[pos_ + 2]) << 16) |
                       (static_cast<uint32_t>(data_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  float F32() {
    const uint32_t bits = U32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return n_ - pos_; }

 private:
  const uint8_t* data_;
  size_t n_;
  size_t pos_ = 0;
};

constexpr char kMagic[4] = {'H', 'E', 'N', '1'};
constexpr uint32_t kVersion = 1;

}  // namespace

uint32_t Crc32(const uint8_t* data, size_t n) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xFFFFFFFFu;
  for (size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void SaveWeights(const HenModel<float>& model, const std::filesystem::path& path) {
  std::vector<uint8_t> payload;
  AppendU32(payload, kVersion);
  AppendU32(payload, static_cast<uint32_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    AppendU32(payload, static_cast<uint32_t>(layer.in_channels));
    AppendU32(payload, static_cast<uint32_t>(layer.out_channels));
    AppendU32(payload, static_cast<uint32_t>(layer.stride));
    for (float w : layer.weights) AppendF32(payload, w);
    for (float b : layer.bias) AppendF32(payload, b);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot create " + path.string());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  std::vector<uint8_t> crc_bytes;
  AppendU32(crc_bytes, Crc32(payload.data(), payload.size()));
  out.write(reinterpret_cast<const char*>(crc_bytes.data()), 4);
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

HenModel<float> LoadWeights(const std::filesystem::path& path, int patch_size,
                            double loss_scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    Fail(ErrorKind::kFormatVersionMismatch, path.string() + ": not a HEN1 weight file");
  }
  if (bytes.size() < 12) {
    Fail(ErrorKind::kChecksumMismatch, path.string() + ": weight file truncated");
  }
  const size_t payload_size = bytes.size() - 8;
  Reader r(bytes.data() + 4, payload_size + 4);

  const uint32_t version = r.U32();
  if (version != kVersion) {
    Fail(ErrorKind::kFormatVersionMismatch,
         path.string() + ": unsupported format version " + std::to_string(version));
  }
  const uint32_t layer_count = r.U32();
  if (layer_count == 0 || layer_count > 64) {
    Fail(ErrorKind::kFormatVersionMismatch, path.string() + ": implausible layer count");
  }

  std::vector<ConvLayer<float>> layers;
  for (uint32_t i = 0; i < layer_count; ++i) {
    const uint32_t in_c = r.U32();
    const uint32_t out_c = r.U32();
    const uint32_t stride = r.U32();
    if (in_c == 0 || out_c == 0 || in_c > 4096 || out_c > 4096 || stride < 1 || stride > 2) {
      Fail(ErrorKind::kFormatVersionMismatch, path.string() + ": implausible layer header");
    }
    auto layer = ConvLayer<float>::Make(static_cast<int>(in_c), static_cast<int>(out_c),
                                        static_cast<int>(stride));
    for (float& w : layer.weights) w = r.F32();
    for (float& b : layer.bias) b = r.F32();
    layers.push_back(std::move(layer));
  }
  if (r.pos() != payload_size) {
    Fail(ErrorKind::kChecksumMismatch, path.string() + ": trailing bytes in weight file");
  }
  const uint32_t stored_crc = r.U32();
  const uint32_t actual_crc = Crc32(bytes.data() + 4, payload_size);
  if (stored_crc != actual_crc) {
    Fail(ErrorKind::kChecksumMismatch, path.string() + ": checksum mismatch");
  }
  return HenModel<float>::FromLayers(std::move(layers), patch_size, loss_scale);
}

}  // namespace homlab
