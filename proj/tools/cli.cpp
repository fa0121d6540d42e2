#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "forge_text.hpp"
#include "pvea/attacks.hpp"
#include "pvea/decoder.hpp"
#include "pvea/engine.hpp"
#include "pvea/forge.hpp"
#include "pvea/mpeg_syntax.hpp"

namespace pvea::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::string& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_failure, "write failed: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// Writes only the byte runs that differ, in place.
std::size_t write_changed(const std::string& path, std::span<const std::uint8_t> before,
                          std::span<const std::uint8_t> after) {
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  if (!f) throw Error(Errc::io_failure, "cannot open " + path + " for update");
  std::size_t written = 0;
  std::size_t i = 0;
  while (i < after.size()) {
    if (before[i] == after[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < after.size() && before[j] != after[j]) ++j;
    f.seekp(static_cast<std::streamoff>(i));
    f.write(reinterpret_cast<const char*>(after.data() + i), static_cast<std::streamsize>(j - i));
    written += j - i;
    i = j;
  }
  f.flush();
  if (!f) throw Error(Errc::io_failure, "positioned write failed: " + path);
  return written;
}

CLI::Validator hex16_validator() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          parse_hex16(s);
        } catch (const Error&) {
          return "expected 32 hex digits";
        }
        return {};
      },
      "HEX32");
}

CLI::Validator factor_validator() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        static const std::regex re(R"(^(0(\.\d{0,4})?|1(\.0{0,4})?|\.\d{1,4})$)");
        if (!std::regex_match(s, re)) return "factor must be a decimal in [0,1] with at most 4 digits";
        return {};
      },
      "P");
}

struct ConfigFlags {
  std::string psr = "1";
  std::string psd = "1";
  std::string pmv = "1";
  std::string mode = "keystream";
  int block_bits = 64;
  bool gop_keying = false;
  std::uint32_t period = 1024;
  std::string strategy = "se-array";
  bool intra_only = false;
  bool signs_only = false;
  std::vector<CLI::Option*> opts;

  void add(CLI::App& app) {
    opts = {
        app.add_option("--psr", psr, "rough-view factor p_sr")->check(factor_validator()),
        app.add_option("--psd", psd, "detail factor p_sd")->check(factor_validator()),
        app.add_option("--pmv", pmv, "motion factor p_mv")->check(factor_validator()),
        app.add_option("--mode", mode, "keystream | feedback | cfb | cascade")
            ->check(CLI::IsMember({"keystream", "feedback", "cfb", "cascade"})),
        app.add_option("--block-bits", block_bits, "cfb register / cascade block width")
            ->check(CLI::Range(1, 64)),
        app.add_flag("--gop-keying", gop_keying, "re-derive the cipher state per GOP"),
        app.add_option("--period", period, "SE-array period N")->check(CLI::Range(1, 65535)),
        app.add_option("--strategy", strategy, "se-array | typical")
            ->check(CLI::IsMember({"se-array", "typical"})),
        app.add_flag("--intra-only", intra_only, "restrict sd/mv to intra macroblocks"),
        app.add_flag("--signs-only", signs_only, "DC and MV residual: leading bit only"),
    };
  }

  bool given(std::size_t i) const { return opts[i]->count() > 0; }

  // `all`: apply defaults too, not just flags present on the command line.
  void apply(PveaConfig& c, bool all) const {
    if (all || given(0)) c.factors.fixed[0] = factor_to_fixed(std::stod(psr));
    if (all || given(1)) c.factors.fixed[1] = factor_to_fixed(std::stod(psd));
    if (all || given(2)) c.factors.fixed[2] = factor_to_fixed(std::stod(pmv));
    if (all || given(3)) c.cipher.mode = parse_mode(mode);
    if (all || given(4)) c.cipher.block_bits = block_bits;
    if (all || given(5)) c.cipher.gop_keying = gop_keying;
    if (all || given(6)) c.period = period;
    if (all || given(7)) {
      c.strategy = strategy == "typical" ? SelectionStrategy::typical : SelectionStrategy::se_array;
    }
    if (all || given(8)) c.intra_blocks_only = intra_only;
    if (all || given(9)) c.signs_only = signs_only;
  }
};

Schedule parse_schedule_flag(const std::string& text) {
  Schedule s;
  std::istringstream in(text);
  std::string item;
  static const std::regex re(R"(^(\d+):(on|off)$)");
  while (std::getline(in, item, ',')) {
    std::smatch m;
    if (!std::regex_match(item, m, re)) throw UsageError("bad schedule entry '" + item + "'");
    s.push_back({static_cast<std::uint32_t>(std::stoul(m[1].str())), m[2].str() == "on"});
  }
  return s;
}

Schedule parse_pictures_flag(const std::string& text) {
  static const std::regex re(R"(^(\d+)-(\d+)$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw UsageError("--pictures expects FIRST-LAST");
  const auto first = static_cast<std::uint32_t>(std::stoul(m[1].str()));
  const auto last = static_cast<std::uint32_t>(std::stoul(m[2].str()));
  if (last < first) throw UsageError("--pictures range is empty");
  return picture_range_schedule(first, last);
}

// Content-derived UID for unprovisioned streams encrypted without --uid.
Uid content_uid(std::span<const std::uint8_t> bytes) {
  std::uint64_t a = 0x9E3779B97F4A7C15ull;
  std::uint64_t b = bytes.size();
  for (std::uint8_t byte : bytes) {
    a = mix64(a ^ byte);
    b = mix64(b + a);
  }
  Uid uid{};
  for (int i = 0; i < 8; ++i) {
    uid[i] = static_cast<std::uint8_t>(a >> (56 - 8 * i));
    uid[8 + i] = static_cast<std::uint8_t>(b >> (56 - 8 * i));
  }
  if (uid_absent(uid)) uid[15] = 1;
  return uid;
}

std::string stats_line(const EngineStats& s) {
  std::ostringstream o;
  o << "selected " << s.sites_selected << " of " << s.sites_seen << " sites (sr "
    << s.selected_per_category[0] << ", sd " << s.selected_per_category[1] << ", mv "
    << s.selected_per_category[2] << "), " << s.bits_patched << " bits patched";
  return o.str();
}

// Runs `work` over `items` on up to `jobs` threads; the first error wins.
template <typename Work>
void for_each_job(std::size_t count, int jobs, Work work) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex lock;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(count)); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard g(lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct CryptJob {
  std::string input;
  std::string output;  // empty with --in-place
};

std::vector<CryptJob> crypt_jobs(const std::vector<std::string>& files, bool in_place) {
  std::vector<CryptJob> jobs;
  if (in_place) {
    if (files.empty()) throw UsageError("--in-place needs at least one file");
    for (const auto& f : files) jobs.push_back({f, {}});
  } else {
    if (files.size() != 2) throw UsageError("expected INPUT OUTPUT (or --in-place FILES...)");
    jobs.push_back({files[0], files[1]});
  }
  return jobs;
}

struct CryptOptions {
  std::vector<std::string> files;
  std::string key;
  std::string uid;
  std::string sidecar;
  std::string schedule;
  std::string pictures;
  bool in_place = false;
  int jobs = 1;
  ConfigFlags config;
};

void add_crypt_options(CLI::App& app, CryptOptions& o) {
  app.add_option("files", o.files, "INPUT OUTPUT, or the files to update with --in-place")->required();
  app.add_option("--key", o.key, "128-bit key, 32 hex digits")->required()->check(hex16_validator());
  app.add_option("--uid", o.uid, "video UID, 32 hex digits")->check(hex16_validator());
  app.add_option("--sidecar", o.sidecar, "sidecar path (default: <output>.pvea)");
  app.add_flag("--in-place", o.in_place, "update the input files with positioned writes");
  app.add_option("--jobs", o.jobs, "files processed concurrently")->check(CLI::Range(1, 256));
}

int cmd_encrypt(const CryptOptions& o, std::ostream& out, std::ostream& err) {
  const Key key = parse_hex16(o.key);
  if (!o.schedule.empty() && !o.pictures.empty()) throw UsageError("--schedule and --pictures are exclusive");
  Schedule schedule;
  if (!o.schedule.empty()) schedule = parse_schedule_flag(o.schedule);
  if (!o.pictures.empty()) schedule = parse_pictures_flag(o.pictures);
  const auto jobs = crypt_jobs(o.files, o.in_place);
  if (!o.sidecar.empty() && jobs.size() > 1) throw UsageError("--sidecar needs a single file");
  std::mutex print;

  for_each_job(jobs.size(), o.jobs, [&](std::size_t i) {
    const CryptJob& job = jobs[i];
    const auto plain = read_file(job.input);
    const StreamMap map = parse_stream(plain);
    const auto meta = find_meta(map);

    PveaConfig config;
    if (meta) apply_meta(*meta, config);
    o.config.apply(config, !meta);
    config.schedule = schedule;

    std::optional<Uid> uid;
    if (!o.uid.empty()) uid = parse_hex16(o.uid);
    if (!uid && !meta) uid = content_uid(plain);

    auto cipher = plain;
    const PassResult r = encrypt_in_place(cipher, key, config, uid);
    if (meta) {
      const MetaHeader updated = make_meta(config, meta->uid);
      if (encode_meta(updated) != encode_meta(*meta)) update_meta_in_place(cipher, updated);
    }

    const std::string target = o.in_place ? job.input : job.output;
    std::string sidecar_path;
    if (!meta || !schedule.empty() || (uid && *uid != meta->uid)) {
      Sidecar side;
      side.uid = uid;
      side.schedule = schedule;
      if (!meta) {
        side.config = config;
        side.config->schedule.clear();
      }
      sidecar_path = o.sidecar.empty() ? target + ".pvea" : o.sidecar;
      write_text(sidecar_path, format_sidecar(side));
    }

    if (o.in_place) {
      write_changed(job.input, plain, cipher);
    } else {
      write_file(job.output, cipher);
    }

    std::lock_guard g(print);
    for (const auto& w : r.warnings) err << "warning: " << job.input << ": " << w << "\n";
    out << job.input << ": " << stats_line(r.stats) << "\n";
    if (!sidecar_path.empty()) out << "sidecar: " << sidecar_path << "\n";
  });
  return 0;
}

int cmd_decrypt(const CryptOptions& o, std::ostream& out, std::ostream&) {
  const Key key = parse_hex16(o.key);
  const auto jobs = crypt_jobs(o.files, o.in_place);
  if (!o.sidecar.empty() && jobs.size() > 1) throw UsageError("--sidecar needs a single file");
  std::mutex print;

  for_each_job(jobs.size(), o.jobs, [&](std::size_t i) {
    const CryptJob& job = jobs[i];
    const auto cipher = read_file(job.input);
    const StreamMap map = parse_stream(cipher);
    const auto meta = find_meta(map);

    std::optional<Sidecar> side;
    const std::string side_path = o.sidecar.empty() ? job.input + ".pvea" : o.sidecar;
    if (!o.sidecar.empty() || fs::exists(side_path)) side = parse_sidecar(read_text(side_path));

    PveaConfig config;
    if (meta) apply_meta(*meta, config);
    if (side && side->config) config = *side->config;
    if (!meta && !(side && side->config)) {
      throw Error(Errc::missing_uid, job.input + ": no PVEA header and no sidecar with parameters");
    }
    if (side) config.schedule = side->schedule;

    std::optional<Uid> uid;
    if (!o.uid.empty()) {
      uid = parse_hex16(o.uid);
    } else if (side && side->uid) {
      uid = side->uid;
    }

    auto plain = cipher;
    const PassResult r = decrypt_in_place(plain, key, config, uid);
    if (o.in_place) {
      write_changed(job.input, cipher, plain);
    } else {
      write_file(job.output, plain);
    }
    std::lock_guard g(print);
    out << job.input << ": " << stats_line(r.stats) << "\n";
  });
  return 0;
}

// ---- inspect ---------------------------------------------------------------

const char* picture_type_name(PictureType t) {
  switch (t) {
    case PictureType::I: return "I";
    case PictureType::P: return "P";
    case PictureType::B: return "B";
  }
  return "?";
}

std::string rational_text(const Rational& r) {
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

int cmd_inspect(const std::string& path, bool json_out, std::ostream& out) {
  const auto bytes = read_file(path);
  const StreamMap map = parse_stream(bytes);
  const Census c = census(map);
  const auto meta = find_meta(map);

  std::vector<std::string> advisories;
  for (int k = 0; k < kCategoryCount; ++k) {
    if (c.per_category[k] == 0) {
      const std::string name = category_name(static_cast<Category>(k));
      advisories.push_back("p_" + name + " has no effect: the stream carries no " + name + " elements");
    }
  }

  nlohmann::json pics = nlohmann::json::array();
  for (std::size_t i = 0; i < map.pictures.size(); ++i) {
    const std::size_t n = c.per_picture[i];
    nlohmann::json p = {{"index", i},
                        {"type", picture_type_name(map.pictures[i].type)},
                        {"gop", map.pictures[i].gop_index},
                        {"n", n},
                        {"sr", c.per_picture_category[i][0]},
                        {"sd", c.per_picture_category[i][1]},
                        {"mv", c.per_picture_category[i][2]}};
    if (n > 0) {
      const MinPBound b = min_p_bound(n);
      p["min_p_conservative"] = b.conservative.value();
      p["min_p_refined"] = b.refined ? nlohmann::json(b.refined->value()) : nlohmann::json(nullptr);
      if (!b.refined) {
        advisories.push_back("picture " + std::to_string(i) + ": N = " + std::to_string(n) +
                             " is too small for 2^100 deblocking complexity at any p");
      }
    }
    pics.push_back(p);
  }

  if (json_out) {
    nlohmann::json j;
    j["file"] = path;
    j["width"] = map.sequence.width;
    j["height"] = map.sequence.height;
    j["gops"] = map.gops.size();
    j["bits"] = map.total_bits;
    j["sites"] = c.total();
    for (int k = 0; k < kKindCount; ++k) j["kinds"][kind_name(k)] = c.per_kind[k];
    for (int k = 0; k < kCategoryCount; ++k) {
      j["categories"][category_name(static_cast<Category>(k))] = c.per_category[k];
    }
    j["pictures"] = pics;
    if (meta) {
      j["header"] = {{"uid", to_hex(meta->uid)},
                     {"mode", mode_name(meta->cipher.mode)},
                     {"block_bits", meta->cipher.block_bits},
                     {"gop_keying", meta->cipher.gop_keying},
                     {"p_sr", meta->factors.real(Category::sr)},
                     {"p_sd", meta->factors.real(Category::sd)},
                     {"p_mv", meta->factors.real(Category::mv)},
                     {"period", meta->period}};
    } else {
      j["header"] = nullptr;
    }
    j["advisories"] = advisories;
    out << j.dump(2) << "\n";
    return 0;
  }

  out << path << ": " << map.sequence.width << "x" << map.sequence.height << ", "
      << map.pictures.size() << " pictures, " << map.gops.size() << " GOPs, " << map.total_bits
      << " bits, " << c.total() << " FLC sites\n";
  if (meta) {
    out << "header: uid " << to_hex(meta->uid) << ", mode " << mode_name(meta->cipher.mode)
        << (meta->cipher.gop_keying ? " +gop-keying" : "") << ", factors "
        << meta->factors.real(Category::sr) << "/" << meta->factors.real(Category::sd) << "/"
        << meta->factors.real(Category::mv) << ", period " << meta->period << "\n";
  } else {
    out << "header: none\n";
  }
  out << "\n" << std::left << std::setw(16) << "kind" << "count\n";
  for (int k = 0; k < kKindCount; ++k) out << std::setw(16) << kind_name(k) << c.per_kind[k] << "\n";
  out << "\n" << std::setw(16) << "category" << "count\n";
  for (int k = 0; k < kCategoryCount; ++k) {
    out << std::setw(16) << category_name(static_cast<Category>(k)) << c.per_category[k] << "\n";
  }
  out << "\n" << std::setw(8) << "picture" << std::setw(6) << "type" << std::setw(8) << "N"
      << std::setw(8) << "sr" << std::setw(8) << "sd" << std::setw(8) << "mv" << "min p (100/N, exact)\n";
  for (const auto& p : pics) {
    out << std::setw(8) << p["index"].get<std::size_t>() << std::setw(6)
        << p["type"].get<std::string>() << std::setw(8) << p["n"].get<std::size_t>() << std::setw(8)
        << p["sr"].get<std::size_t>() << std::setw(8) << p["sd"].get<std::size_t>() << std::setw(8)
        << p["mv"].get<std::size_t>();
    const std::size_t n = p["n"].get<std::size_t>();
    if (n == 0) {
      out << "-";
    } else {
      const MinPBound b = min_p_bound(n);
      out << rational_text(b.conservative) << ", " << (b.refined ? rational_text(*b.refined) : "none");
    }
    out << "\n";
  }
  if (!advisories.empty()) out << "\n";
  for (const auto& a : advisories) out << "advisory: " << a << "\n";
  return 0;
}

// ---- provision / eca / dump / forge ------------------------------------------

int cmd_provision(const std::string& in, const std::string& outp, const std::string& uid_hex,
                  const ConfigFlags& flags, std::ostream& out) {
  const auto bytes = read_file(in);
  PveaConfig config;
  flags.apply(config, true);
  const auto result = provision(bytes, parse_hex16(uid_hex), config);
  write_file(outp, result);
  out << outp << ": " << result.size() - bytes.size() << " bytes of header inserted\n";
  return 0;
}

int cmd_eca(const std::string& in, const std::string& outp, const std::string& scope, std::ostream& out) {
  auto bytes = read_file(in);
  eca_in_place(bytes, scope == "full" ? EcaScope::full : EcaScope::ac_signs);
  write_file(outp, bytes);
  out << outp << ": concealment (" << scope << ") applied\n";
  return 0;
}

int cmd_dump(const std::string& in, const std::string& dir, bool ppm,
             std::optional<std::uint32_t> only, std::ostream& out, std::ostream& err) {
  const auto bytes = read_file(in);
  const StreamMap map = parse_stream(bytes);
  fs::create_directories(dir);
  const std::string stem = fs::path(in).stem().string();
  if (only && *only >= map.pictures.size()) {
    throw Error(Errc::invalid_argument, "picture " + std::to_string(*only) + " does not exist");
  }
  for (std::uint32_t i = 0; i < map.pictures.size(); ++i) {
    if (only && *only != i) continue;
    if (map.pictures[i].type != PictureType::I) {
      if (only) throw Error(Errc::not_intra_picture, "picture " + std::to_string(i) + " is not an I-picture");
      err << "skipping picture " << i << " (" << picture_type_name(map.pictures[i].type) << ")\n";
      continue;
    }
    const Frame f = decode_i_picture(bytes, map, i);
    const std::string base = (fs::path(dir) / (stem + "_pic" + std::to_string(i))).string();
    write_pgm(f.y, base + ".pgm");
    out << base << ".pgm\n";
    if (ppm) {
      write_ppm(f, base + ".ppm");
      out << base << ".ppm\n";
    }
  }
  return 0;
}

int cmd_forge(const std::string& spec_path, bool dark, const std::string& outp,
              const std::string& sites_path, std::ostream& out) {
  if (dark == !spec_path.empty()) throw UsageError("forge needs exactly one of --spec or --dark");
  const ForgeSpec spec = dark ? dark_fixture_spec() : parse_forge_text(read_text(spec_path));
  const ForgeResult r = forge_stream(spec);
  write_file(outp, r.bytes);
  if (!sites_path.empty()) write_text(sites_path, format_site_list(r.sites));
  out << outp << ": " << r.bytes.size() << " bytes, " << r.sites.size() << " FLC sites\n";
  return 0;
}

// ---- attack-pd ---------------------------------------------------------------

Image image_from_plane(const Plane& p) {
  Image img{p.width, p.height, std::vector<int>(p.samples.begin(), p.samples.end())};
  return img;
}

Plane plane_from_image(const Image& img) {
  Plane p(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    p.samples[i] = static_cast<std::uint8_t>(std::clamp(img.pixels[i], 0, 255));
  }
  return p;
}

std::string pd_params_text(const PdParams& p) {
  return std::to_string(p.alpha_star) + "," + (p.d ? "1" : "0") + "," + (p.n ? "1" : "0");
}

std::array<PdParams, 4> parse_pd_params(const std::string& text) {
  static const std::regex re(R"(^(\d+),([01]),([01])$)");
  std::array<PdParams, 4> out{};
  std::istringstream in(text);
  std::string item;
  int count = 0;
  while (std::getline(in, item, ';')) {
    std::smatch m;
    if (count >= 4 || !std::regex_match(item, m, re)) throw UsageError("--params expects 4 entries ALPHA,D,N;...");
    out[count].alpha_star = std::stoi(m[1].str());
    out[count].d = m[2].str() == "1";
    out[count].n = m[3].str() == "1";
    if (out[count].alpha_star < 1 || out[count].alpha_star > 100) throw UsageError("alpha* must be 1..100");
    ++count;
  }
  if (count != 4) throw UsageError("--params expects 4 entries ALPHA,D,N;...");
  return out;
}

struct PdOptions {
  std::string input;
  std::string output;
  std::string params;
  std::uint64_t seed = 1;
  std::string pairs;
  std::string coupling = "equal";
  std::uint64_t m = 0;
  std::uint64_t p = 0;
};

int cmd_pd_encrypt(const PdOptions& o, std::ostream& out) {
  const Image img = image_from_plane(read_pgm(o.input));
  std::array<PdParams, 4> params{};
  if (!o.params.empty()) {
    params = parse_pd_params(o.params);
  } else {
    std::mt19937_64 rng(o.seed);
    for (auto& p : params) {
      p.alpha_star = 50 + static_cast<int>(rng() % 41);
      p.d = rng() & 1;
      p.n = p.d;
    }
  }
  write_pgm(plane_from_image(pd_encrypt_2x2(img, params)), o.output);
  for (int i = 0; i < 4; ++i) out << "sb" << i << " " << pd_params_text(params[i]) << "\n";
  return 0;
}

int cmd_pd_kpa(const PdOptions& o, std::ostream& out) {
  std::istringstream in(read_text(o.pairs));
  std::vector<std::pair<double, double>> pairs;
  for (double a, b; in >> a >> b;) pairs.emplace_back(a, b);
  const PdEstimate e = pd_kpa(pairs);
  out << "alpha " << e.alpha << " (alpha* " << e.alpha_star << "), D " << e.d << ", N " << e.n << "\n";
  return 0;
}

int cmd_pd_brute(const PdOptions& o, std::ostream& out) {
  const Image img = image_from_plane(read_pgm(o.input));
  PdBruteforceOptions opt;
  opt.coupling = o.coupling == "free" ? DnCoupling::free
                 : o.coupling == "opposite" ? DnCoupling::opposite
                                            : DnCoupling::equal;
  const PdBruteforceResult r = pd_bruteforce(img, opt);
  for (int i = 0; i < 4; ++i) out << "sb" << i << " " << pd_params_text(r.params[i]) << "\n";
  out << "candidates per SB " << r.candidates_per_sb << ", naive joint search 2^" << std::fixed
      << std::setprecision(2) << r.naive_log2 << ", pairs evaluated " << r.evaluated_pairs << "\n";
  if (!o.output.empty()) {
    Image dec = img;
    const std::uint32_t half_w = img.width / 2;
    const std::uint32_t half_h = img.height / 2;
    for (std::uint32_t y = 0; y < img.height; ++y) {
      for (std::uint32_t x = 0; x < img.width; ++x) {
        const int sb = (y >= half_h ? 2 : 0) + (x >= half_w ? 1 : 0);
        dec.at(x, y) = static_cast<int>(std::lround(pd_unmap(img.at(x, y), r.params[sb])));
      }
    }
    write_pgm(plane_from_image(dec), o.output);
  }
  return 0;
}

int cmd_pd_keyspace(const PdOptions& o, std::ostream& out) {
  const Keyspace k = pd_keyspace(o.m, o.p);
  out << "keyspace " << k.count << " (2^" << std::fixed << std::setprecision(2) << k.log2 << ")\n";
  return 0;
}

// ---- attack-wyz --------------------------------------------------------------

CoeffBlock read_block(const std::string& path) {
  std::istringstream in(read_text(path));
  CoeffBlock b{};
  for (int i = 0; i < 64; ++i) {
    if (!(in >> b[i])) throw Error(Errc::invalid_argument, path + ": expected 64 integers");
  }
  return b;
}

std::string block_text(const CoeffBlock& b) {
  std::ostringstream o;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) o << (u ? " " : "") << b[v * 8 + u];
    o << "\n";
  }
  return o.str();
}

struct WyzOptions {
  std::string input;
  std::string output;
  std::string plain;
  std::string cipher;
  double beta = 0.5;
  double c = 1.0;
  bool encrypt_dc = false;
  int dc_sign = 1;
  bool known_averages = false;
};

int cmd_wyz_encrypt(const WyzOptions& o, std::ostream& out) {
  const CoeffBlock b = read_block(o.input);
  WyzParams params{o.beta, o.c, wyz_band_averages(b)};
  const CoeffBlock enc = wyz_encrypt(b, params, o.encrypt_dc, o.dc_sign);
  if (o.output.empty()) {
    out << block_text(enc);
  } else {
    write_text(o.output, block_text(enc));
  }
  return 0;
}

int cmd_wyz_kpa(const WyzOptions& o, std::ostream& out) {
  const CoeffBlock p = read_block(o.plain);
  const CoeffBlock c = read_block(o.cipher);
  std::vector<WyzPair> pairs;
  for (int i = 1; i < 64; ++i) pairs.push_back({kWyzSubband[i], p[i], c[i]});
  std::optional<std::array<int, kWyzBands>> averages;
  if (o.known_averages) averages = wyz_band_averages(p);
  const WyzKpaResult r = wyz_kpa(pairs, averages);
  for (int band = 1; band < kWyzBands; ++band) {
    out << "band " << band << " shift ";
    if (r.shifts[band]) {
      out << *r.shifts[band] << "\n";
    } else {
      out << "unknown\n";
    }
  }
  if (r.informative_bands > 0) {
    out << "beta in [" << r.beta.lo_num << "/" << r.beta.lo_den << ", " << r.beta.hi_num << "/"
        << r.beta.hi_den << (r.beta.hi_closed ? "]" : ")") << " from " << r.informative_bands << " bands\n";
  } else {
    out << "beta unconstrained (no band averages)\n";
  }
  return 0;
}

// ---- complexity ----------------------------------------------------------------

int cmd_complexity(std::uint64_t n, const std::optional<std::string>& p, const std::optional<std::uint64_t>& k,
                   std::ostream& out) {
  if (p.has_value() == k.has_value()) throw UsageError("complexity needs exactly one of --p or --k");
  const ComplexityReport r = k ? deblock_complexity_k(n, *k) : deblock_complexity(n, std::stod(*p));
  const MinPBound b = min_p_bound(n);
  out << "N " << r.n << ", p " << r.p << ", selected k " << r.selected << "\n";
  out << "C(N,k) = " << r.binomial_decimal << "\n";
  out << std::fixed << std::setprecision(2) << "log2 C(N,k) = " << r.log2_binomial
      << ", log2 complexity = " << r.log2_complexity << "\n";
  out << (r.meets_threshold ? "meets" : "below") << " 2^100 threshold\n";
  out << "minimum p: conservative " << rational_text(b.conservative) << " (" << std::setprecision(4)
      << b.conservative.value() << "), exact ";
  if (b.refined) {
    out << rational_text(*b.refined) << " (" << b.refined->value() << ")\n";
  } else {
    out << "none (N too small)\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perceptual encryption of MPEG-1 video elementary streams", "pvea"};
  app.require_subcommand(1);

  std::string path_a;
  std::string path_b;
  bool json_out = false;
  auto* inspect = app.add_subcommand("inspect", "print the FLC census of a stream");
  inspect->add_option("input", path_a)->required();
  inspect->add_flag("--json", json_out, "machine-readable output");

  CryptOptions enc_opts;
  auto* encrypt = app.add_subcommand("encrypt", "encrypt selected FLCs (size-preserving)");
  add_crypt_options(*encrypt, enc_opts);
  enc_opts.config.add(*encrypt);
  encrypt->add_option("--schedule", enc_opts.schedule, "switch points, e.g. 0:on,5:off");
  encrypt->add_option("--pictures", enc_opts.pictures, "encrypt only pictures FIRST-LAST");

  CryptOptions dec_opts;
  auto* decrypt = app.add_subcommand("decrypt", "invert encrypt using the header and sidecar");
  add_crypt_options(*decrypt, dec_opts);

  std::string prov_uid;
  ConfigFlags prov_flags;
  auto* prov = app.add_subcommand("provision", "insert the public parameter header");
  prov->add_option("input", path_a)->required();
  prov->add_option("output", path_b)->required();
  prov->add_option("--uid", prov_uid, "video UID, 32 hex digits")->required()->check(hex16_validator());
  prov_flags.add(*prov);

  std::string eca_scope = "ac_signs";
  auto* eca_cmd = app.add_subcommand("eca", "error-concealment attack");
  eca_cmd->add_option("input", path_a)->required();
  eca_cmd->add_option("output", path_b)->required();
  eca_cmd->add_option("--scope", eca_scope, "ac_signs | full")->check(CLI::IsMember({"ac_signs", "full"}));

  std::string dump_dir = ".";
  bool dump_ppm = false;
  std::optional<std::uint32_t> dump_picture;
  auto* dump = app.add_subcommand("dump", "write decoded I-pictures as <stem>_picN.pgm");
  dump->add_option("input", path_a)->required();
  dump->add_option("--out-dir", dump_dir, "output directory");
  dump->add_flag("--ppm", dump_ppm, "also write colour PPM frames");
  dump->add_option("--picture", dump_picture, "only this picture index");

  std::string forge_spec;
  std::string forge_sites;
  bool forge_dark = false;
  auto* forge = app.add_subcommand("forge", "assemble a stream from a text description");
  forge->add_option("output", path_b)->required();
  forge->add_option("--spec", forge_spec, "text description");
  forge->add_flag("--dark", forge_dark, "the built-in dark fixture");
  forge->add_option("--sites", forge_sites, "write the FLC site list here");

  PdOptions pd;
  auto* attack_pd = app.add_subcommand("attack-pd", "affine pixel scrambling: encrypt and attack");
  attack_pd->require_subcommand(1);
  auto* pd_enc = attack_pd->add_subcommand("encrypt", "scramble the four blocks of a 2Mx2M PGM");
  pd_enc->add_option("input", pd.input)->required();
  pd_enc->add_option("output", pd.output)->required();
  pd_enc->add_option("--params", pd.params, "ALPHA,D,N;ALPHA,D,N;ALPHA,D,N;ALPHA,D,N");
  pd_enc->add_option("--seed", pd.seed, "seed for random parameters");
  auto* pd_kpa_cmd = attack_pd->add_subcommand("kpa", "recover alpha, D, N from known pairs");
  pd_kpa_cmd->add_option("pairs", pd.pairs, "file of 'plain cipher' lines")->required();
  auto* pd_brute = attack_pd->add_subcommand("brute", "ciphertext-only search on a scrambled PGM");
  pd_brute->add_option("input", pd.input)->required();
  pd_brute->add_option("--out", pd.output, "write the trial decryption");
  pd_brute->add_option("--coupling", pd.coupling, "equal | opposite | free")
      ->check(CLI::IsMember({"equal", "opposite", "free"}));
  auto* pd_ks = attack_pd->add_subcommand("keyspace", "key space of the alpha rule");
  pd_ks->add_option("--m", pd.m, "scrambling block size M")->required();
  pd_ks->add_option("--p", pd.p, "sub-block size P")->required();

  WyzOptions wyz;
  auto* attack_wyz = app.add_subcommand("attack-wyz", "sub-band shifting: encrypt and attack");
  attack_wyz->require_subcommand(1);
  auto* wyz_enc = attack_wyz->add_subcommand("encrypt", "shift the bands of one 8x8 block");
  wyz_enc->add_option("input", wyz.input, "64 integers, row-major")->required();
  wyz_enc->add_option("--out", wyz.output);
  wyz_enc->add_option("--beta", wyz.beta)->check(CLI::Range(0.0, 1.0));
  wyz_enc->add_option("--c", wyz.c, "DC scale");
  wyz_enc->add_flag("--encrypt-dc", wyz.encrypt_dc);
  wyz_enc->add_option("--dc-sign", wyz.dc_sign)->check(CLI::IsMember({-1, 1}));
  auto* wyz_kpa_cmd = attack_wyz->add_subcommand("kpa", "recover shifts and bracket beta");
  wyz_kpa_cmd->add_option("plain", wyz.plain)->required();
  wyz_kpa_cmd->add_option("cipher", wyz.cipher)->required();
  wyz_kpa_cmd->add_flag("--known-averages", wyz.known_averages, "band averages are public");

  std::uint64_t cx_n = 0;
  std::optional<std::string> cx_p;
  std::optional<std::uint64_t> cx_k;
  auto* cx = app.add_subcommand("complexity", "deblocking search complexity C(N,k)*2^k");
  cx->add_option("--n", cx_n, "elements per picture")->required()->check(CLI::PositiveNumber);
  cx->add_option("--p", cx_p, "factor")->check(factor_validator());
  cx->add_option("--k", cx_k, "selected elements");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*inspect) return cmd_inspect(path_a, json_out, out);
    if (*encrypt) return cmd_encrypt(enc_opts, out, err);
    if (*decrypt) return cmd_decrypt(dec_opts, out, err);
    if (*prov) return cmd_provision(path_a, path_b, prov_uid, prov_flags, out);
    if (*eca_cmd) return cmd_eca(path_a, path_b, eca_scope, out);
    if (*dump) return cmd_dump(path_a, dump_dir, dump_ppm, dump_picture, out, err);
    if (*forge) return cmd_forge(forge_spec, forge_dark, path_b, forge_sites, out);
    if (*pd_enc) return cmd_pd_encrypt(pd, out);
    if (*pd_kpa_cmd) return cmd_pd_kpa(pd, out);
    if (*pd_brute) return cmd_pd_brute(pd, out);
    if (*pd_ks) return cmd_pd_keyspace(pd, out);
    if (*wyz_enc) return cmd_wyz_encrypt(wyz, out);
    if (*wyz_kpa_cmd) return cmd_wyz_kpa(wyz, out);
    if (*cx) return cmd_complexity(cx_n, cx_p, cx_k, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pvea::cli
