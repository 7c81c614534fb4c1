#include "nlsam/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "nlsam/error.hpp"

namespace nlsam {
namespace {

static_assert(std::endian::native == std::endian::little, "NIfTI-1 I/O assumes a little-endian host");

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDefaultVoxOffset = 352;

// Byte offsets of the NIfTI-1 header fields used here.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffMagic = 344;

template <typename T>
T get(const std::vector<std::uint8_t>& buf, std::size_t off) {
  T value;
  std::memcpy(&value, buf.data() + off, sizeof(T));
  return value;
}

template <typename T>
void put(std::vector<std::uint8_t>& buf, std::size_t off, T value) {
  std::memcpy(buf.data() + off, &value, sizeof(T));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

std::size_t bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
    case static_cast<std::int16_t>(NiftiDatatype::int16): return 2;
    case static_cast<std::int16_t>(NiftiDatatype::float32): return 4;
    case static_cast<std::int16_t>(NiftiDatatype::float64): return 8;
    default: throw UnsupportedDatatypeError("unsupported NIfTI datatype code " + std::to_string(datatype));
  }
}

Volume4D parse(const std::filesystem::path& path, bool clamp, ReadReport* report) {
  const auto bytes = slurp(path);
  const std::string where = " in '" + path.string() + "'";
  if (bytes.size() < kHeaderSize) throw MalformedHeaderError("file shorter than a NIfTI-1 header" + where);
  if (get<std::int32_t>(bytes, kOffSizeofHdr) != static_cast<std::int32_t>(kHeaderSize)) {
    throw MalformedHeaderError("sizeof_hdr is not 348 (big-endian or not NIfTI-1)" + where);
  }
  if (std::memcmp(bytes.data() + kOffMagic, "n+1\0", 4) != 0) {
    throw MalformedHeaderError("magic is not \"n+1\" (only single-file NIfTI-1 is supported)" + where);
  }

  const auto ndim = get<std::int16_t>(bytes, kOffDim);
  if (ndim < 3 || ndim > 4) throw MalformedHeaderError("dimension count must be 3 or 4" + where);
  Shape4 dims{1, 1, 1, 1};
  for (int i = 0; i < ndim; ++i) {
    const auto d = get<std::int16_t>(bytes, kOffDim + 2 * (i + 1));
    if (d <= 0) throw MalformedHeaderError("non-positive dimension" + where);
    dims[i] = static_cast<std::size_t>(d);
  }

  const auto datatype = get<std::int16_t>(bytes, kOffDatatype);
  const std::size_t bpv = bytes_per_voxel(datatype);

  std::array<double, 3> spacing{};
  for (int i = 0; i < 3; ++i) {
    const double p = std::abs(get<float>(bytes, kOffPixdim + 4 * (i + 1)));
    spacing[i] = (p > 0.0 && std::isfinite(p)) ? p : 1.0;
  }

  const float vox_offset_f = get<float>(bytes, kOffVoxOffset);
  if (!(vox_offset_f >= static_cast<float>(kHeaderSize))) throw MalformedHeaderError("vox_offset before end of header" + where);
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);

  const std::size_t count = dims[0] * dims[1] * dims[2] * dims[3];
  if (bytes.size() < vox_offset || bytes.size() - vox_offset < count * bpv) {
    throw TruncatedDataError("data section holds fewer than " + std::to_string(count) + " voxels" + where);
  }

  const float slope = get<float>(bytes, kOffSclSlope);
  const float inter = get<float>(bytes, kOffSclInter);
  const bool scaled = slope != 0.0f && std::isfinite(slope);

  std::vector<double> data(count);
  const std::uint8_t* src = bytes.data() + vox_offset;
  for (std::size_t i = 0; i < count; ++i) {
    double raw = 0.0;
    switch (bpv) {
      case 2: { std::int16_t v; std::memcpy(&v, src + 2 * i, 2); raw = v; break; }
      case 4: { float v; std::memcpy(&v, src + 4 * i, 4); raw = v; break; }
      default: { double v; std::memcpy(&v, src + 8 * i, 8); raw = v; break; }
    }
    data[i] = scaled ? raw * static_cast<double>(slope) + static_cast<double>(inter) : raw;
  }

  std::size_t clamped = 0;
  if (clamp) {
    for (double& v : data) {
      if (v < 0.0) {
        v = 0.0;
        ++clamped;
      }
    }
  }
  if (report) report->clamped_negatives = clamped;

  Volume4D vol(dims, spacing, std::move(data));
  vol.set_source_header(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + kHeaderSize));
  validate(vol);
  return vol;
}

}  // namespace

Volume4D read_volume(const std::filesystem::path& path, ReadReport* report) { return parse(path, true, report); }

Volume4D read_volume_raw(const std::filesystem::path& path) { return parse(path, false, nullptr); }

void write_volume(const Volume4D& vol, const std::filesystem::path& path, NiftiDatatype datatype) {
  const auto& dims = vol.dims();
  std::vector<std::uint8_t> hdr(kDefaultVoxOffset, 0);
  const auto& src = vol.source_header();
  const bool have_src = src.size() == kHeaderSize;

  put<std::int32_t>(hdr, kOffSizeofHdr, static_cast<std::int32_t>(kHeaderSize));
  const std::int16_t ndim = dims[3] > 1 ? 4 : 3;
  put<std::int16_t>(hdr, kOffDim, ndim);
  for (int i = 0; i < 7; ++i) {
    std::int16_t d = 1;
    if (i < ndim) {
      if (dims[i] > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
        throw DomainError("dimension too large for NIfTI-1");
      }
      d = static_cast<std::int16_t>(dims[i]);
    }
    put<std::int16_t>(hdr, kOffDim + 2 * (i + 1), d);
  }
  const std::size_t bpv = bytes_per_voxel(static_cast<std::int16_t>(datatype));
  put<std::int16_t>(hdr, kOffDatatype, static_cast<std::int16_t>(datatype));
  put<std::int16_t>(hdr, kOffBitpix, static_cast<std::int16_t>(8 * bpv));

  put<float>(hdr, kOffPixdim, have_src ? get<float>(src, kOffPixdim) : 1.0f);
  for (int i = 0; i < 3; ++i) put<float>(hdr, kOffPixdim + 4 * (i + 1), static_cast<float>(vol.spacing()[i]));
  put<float>(hdr, kOffPixdim + 16, 1.0f);
  put<float>(hdr, kOffVoxOffset, static_cast<float>(kDefaultVoxOffset));
  put<float>(hdr, kOffSclSlope, 1.0f);
  put<float>(hdr, kOffSclInter, 0.0f);
  hdr[kOffXyztUnits] = have_src ? src[kOffXyztUnits] : std::uint8_t{2 | 8};  // mm, seconds
  if (have_src) {
    // qform/sform codes, quaternion, offsets, srow_* and intent_name.
    std::copy(src.begin() + kOffQformCode, src.begin() + kOffMagic, hdr.begin() + kOffQformCode);
  }
  std::memcpy(hdr.data() + kOffMagic, "n+1\0", 4);

  std::vector<std::uint8_t> payload(vol.size() * bpv);
  for (std::size_t i = 0; i < vol.size(); ++i) {
    const double v = vol.data()[i];
    switch (datatype) {
      case NiftiDatatype::int16: {
        const double r = std::clamp(std::round(v), -32768.0, 32767.0);
        const auto s = static_cast<std::int16_t>(r);
        std::memcpy(payload.data() + 2 * i, &s, 2);
        break;
      }
      case NiftiDatatype::float32: {
        const auto f = static_cast<float>(v);
        std::memcpy(payload.data() + 4 * i, &f, 4);
        break;
      }
      case NiftiDatatype::float64: std::memcpy(payload.data() + 8 * i, &v, 8); break;
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Mask3D read_mask(const std::filesystem::path& path) {
  const Volume4D vol = read_volume_raw(path);
  Mask3D mask(vol.spatial_dims(), false);
  auto first = vol.volume(0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data[i] = first[i] != 0.0 ? 1 : 0;
  return mask;
}

void write_mask(const Mask3D& mask, const std::filesystem::path& path) {
  Volume4D vol({mask.dims[0], mask.dims[1], mask.dims[2], 1});
  for (std::size_t i = 0; i < mask.size(); ++i) vol.data()[i] = mask.data[i] ? 1.0 : 0.0;
  write_volume(vol, path, NiftiDatatype::int16);
}

}  // namespace nlsam
