#include "rispls/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

namespace rispls {

namespace {

constexpr char kMagic[8] = {'R', 'I', 'S', 'P', 'L', 'S', '1', '\0'};
constexpr char kOracleMagic[4] = {'O', 'R', 'C', 'L'};
constexpr std::uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_bytes(std::FILE* f, const void* p, std::size_t n) {
  if (std::fwrite(p, 1, n, f) != n) throw io_error("dataset: short write");
}
void read_bytes(std::FILE* f, void* p, std::size_t n) {
  if (std::fread(p, 1, n, f) != n) throw io_error("dataset: short read");
}
template <typename T>
void write_pod(std::FILE* f, T v) {
  write_bytes(f, &v, sizeof(T));
}
template <typename T>
T read_pod(std::FILE* f) {
  T v;
  read_bytes(f, &v, sizeof(T));
  return v;
}

void write_cmat(std::FILE* f, const CMat& m) {
  // std::complex<double> is laid out as (re, im) doubles
  write_bytes(f, m.data(), m.size() * sizeof(cplx));
}
void read_cmat(std::FILE* f, CMat& m, std::size_t n) {
  m.resize(n);
  read_bytes(f, m.data(), n * sizeof(cplx));
}

void write_config(std::FILE* f, const ScenarioConfig& c) {
  const double fields[] = {c.bs_pos.x,    c.bs_pos.y,     c.ris_pos.x,
                           c.ris_pos.y,   c.lu_center.x,  c.lu_center.y,
                           c.lu_radius,   c.eve_center.x, c.eve_center.y,
                           c.eve_radius,  c.rho_db,       c.alpha,
                           c.rician_beta_db, c.carrier_hz, c.noise_dbm,
                           c.eve_noise_dbm,  c.p_max_dbm,  c.p_c_watt};
  write_bytes(f, fields, sizeof(fields));
  write_pod<std::uint64_t>(f, c.seed);
}

void read_config(std::FILE* f, ScenarioConfig& c) {
  double fields[18];
  read_bytes(f, fields, sizeof(fields));
  c.bs_pos = {fields[0], fields[1]};
  c.ris_pos = {fields[2], fields[3]};
  c.lu_center = {fields[4], fields[5]};
  c.lu_radius = fields[6];
  c.eve_center = {fields[7], fields[8]};
  c.eve_radius = fields[9];
  c.rho_db = fields[10];
  c.alpha = fields[11];
  c.rician_beta_db = fields[12];
  c.carrier_hz = fields[13];
  c.noise_dbm = fields[14];
  c.eve_noise_dbm = fields[15];
  c.p_max_dbm = fields[16];
  c.p_c_watt = fields[17];
  c.seed = read_pod<std::uint64_t>(f);
}

}  // namespace

Dataset generate_dataset(const ScenarioConfig& cfg, std::size_t count) {
  cfg.validate();
  Dataset ds;
  ds.cfg = cfg;
  ds.samples.resize(count);
  Rng root(cfg.seed);
  for (std::size_t i = 0; i < count; ++i)
    ds.samples[i] = sample_scenario(cfg, root.split(i));
  return ds;
}

void write_dataset(const std::string& path, const Dataset& ds) {
  if (ds.oracle_see && ds.oracle_see->size() != ds.samples.size())
    throw usage_error("write_dataset: oracle label count mismatch");
  std::string tmp = path + ".tmp";
  {
    FilePtr f(std::fopen(tmp.c_str(), "wb"));
    if (!f) throw io_error("dataset: cannot open " + tmp + " for writing");
    write_bytes(f.get(), kMagic, 8);
    write_pod<std::uint32_t>(f.get(), kVersion);
    write_pod<std::uint32_t>(f.get(), static_cast<std::uint32_t>(ds.cfg.n_t));
    write_pod<std::uint32_t>(f.get(), static_cast<std::uint32_t>(ds.cfg.l));
    write_pod<std::uint32_t>(f.get(), static_cast<std::uint32_t>(ds.cfg.k));
    write_pod<std::uint32_t>(f.get(), static_cast<std::uint32_t>(ds.cfg.m));
    write_pod<std::uint64_t>(f.get(), ds.samples.size());
    write_config(f.get(), ds.cfg);
    for (const auto& ch : ds.samples) {
      write_cmat(f.get(), ch.H);
      for (const auto& v : ch.h_b) write_cmat(f.get(), v);
      for (const auto& v : ch.h_r) write_cmat(f.get(), v);
      for (const auto& v : ch.f_b) write_cmat(f.get(), v);
      for (const auto& v : ch.f_r) write_cmat(f.get(), v);
    }
    if (ds.oracle_see) {
      write_bytes(f.get(), kOracleMagic, 4);
      write_pod<std::uint32_t>(f.get(), kVersion);
      write_pod<std::uint64_t>(f.get(), ds.oracle_see->size());
      write_bytes(f.get(), ds.oracle_see->data(),
                  ds.oracle_see->size() * sizeof(double));
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw io_error("dataset: rename failed for " + path);
}

Dataset read_dataset(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw io_error("dataset: cannot open " + path);
  char magic[8];
  read_bytes(f.get(), magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw io_error("dataset: bad magic in " + path);
  std::uint32_t version = read_pod<std::uint32_t>(f.get());
  if (version != kVersion)
    throw io_error("dataset: unsupported version " + std::to_string(version));

  Dataset ds;
  std::uint32_t n_t = read_pod<std::uint32_t>(f.get());
  std::uint32_t l = read_pod<std::uint32_t>(f.get());
  std::uint32_t k = read_pod<std::uint32_t>(f.get());
  std::uint32_t m = read_pod<std::uint32_t>(f.get());
  std::uint64_t count = read_pod<std::uint64_t>(f.get());
  read_config(f.get(), ds.cfg);
  ds.cfg.n_t = n_t;
  ds.cfg.l = l;
  ds.cfg.k = k;
  ds.cfg.m = m;

  ds.samples.resize(count);
  for (auto& ch : ds.samples) {
    ch.n_t = n_t;
    ch.l = l;
    ch.k = k;
    ch.m = m;
    read_cmat(f.get(), ch.H, static_cast<std::size_t>(l) * n_t);
    ch.h_b.resize(k);
    ch.h_r.resize(k);
    ch.f_b.resize(m);
    ch.f_r.resize(m);
    for (auto& v : ch.h_b) read_cmat(f.get(), v, n_t);
    for (auto& v : ch.h_r) read_cmat(f.get(), v, l);
    for (auto& v : ch.f_b) read_cmat(f.get(), v, n_t);
    for (auto& v : ch.f_r) read_cmat(f.get(), v, l);
    ch.sigma2.assign(k, ds.cfg.noise_watt());
    ch.sigma2_e.assign(m, ds.cfg.eve_noise_watt());
  }

  char omagic[4];
  if (std::fread(omagic, 1, 4, f.get()) == 4) {
    if (std::memcmp(omagic, kOracleMagic, 4) != 0)
      throw io_error("dataset: trailing bytes are not an oracle section");
    std::uint32_t oversion = read_pod<std::uint32_t>(f.get());
    if (oversion != kVersion)
      throw io_error("dataset: unsupported oracle section version");
    std::uint64_t ocount = read_pod<std::uint64_t>(f.get());
    if (ocount != count) throw io_error("dataset: oracle label count mismatch");
    std::vector<double> labels(ocount);
    read_bytes(f.get(), labels.data(), ocount * sizeof(double));
    ds.oracle_see = std::move(labels);
  }
  return ds;
}

}  // namespace rispls
