#include "partivae/io.hpp"

#include "partivae/errors.hpp"
#include "partivae/version.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace partivae::io {

namespace {

void dump_number(const Json& j, std::string& out) {
  char buf[40];
  if (j.is_number_integer()) {
    std::snprintf(buf, sizeof(buf), "%" PRId64, j.get<std::int64_t>());
  } else if (j.is_number_unsigned()) {
    std::snprintf(buf, sizeof(buf), "%" PRIu64, j.get<std::uint64_t>());
  } else {
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw NumericError("canonical_dump: non-finite number");
    std::snprintf(buf, sizeof(buf), "%.17g", v);
  }
  out += buf;
}

void dump_value(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // nlohmann objects iterate sorted
        if (!first) out += ',';
        first = false;
        out += Json(it.key()).dump();
        out += ':';
        dump_value(it.value(), out);
      }
      out += '}';
      return;
    }
    case Json::value_t::array: {
      out += '[';
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_value(j[i], out);
      }
      out += ']';
      return;
    }
    case Json::value_t::string:
      out += j.dump();  // escaped string literal
      return;
    case Json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case Json::value_t::null:
      out += "null";
      return;
    default:
      dump_number(j, out);
      return;
  }
}

}  // namespace

std::string canonical_dump(const Json& j) {
  std::string out;
  dump_value(j, out);
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path + "'");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw DataError("short write to '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return s;
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw DataError("invalid JSON in '" + path + "': " + e.what());
  }
}

// ---- target snapshots -------------------------------------------------------

Json target_to_json(const targets::TargetModel& t) {
  Json j;
  switch (t.kind()) {
    case targets::TargetModel::Kind::kIsing: {
      const auto& is = t.ising();
      j["kind"] = "ising";
      j["beta"] = is.beta;
      if (is.L >= 3) {
        j["L"] = is.L;
      } else {
        j["n"] = is.n;
        Json bonds = Json::array();
        for (auto [a, b] : is.bonds) bonds.push_back(Json::array({a, b}));
        j["bonds"] = bonds;
      }
      return j;
    }
    case targets::TargetModel::Kind::kSbm: {
      const auto& s = t.sbm();
      j["kind"] = "sbm";
      j["n"] = s.n;
      Json edges = Json::array();
      for (auto [a, b] : s.edges) edges.push_back(Json::array({a, b}));
      j["edges"] = edges;
      j["omega_in_logit"] = s.omega_in_logit;
      j["omega_out_logit"] = s.omega_out_logit;
      j["learn_omega"] = s.learn_omega;
      return j;
    }
    default: {
      const auto& r = t.rank();
      j["kind"] = "ranking";
      j["n"] = r.n;
      Json comps = Json::array();
      for (auto [a, b] : r.comparisons) comps.push_back(Json::array({a, b}));
      j["comparisons"] = comps;
      j["w"] = r.w;
      j["learn_w"] = r.learn_w;
      return j;
    }
  }
}

namespace {

std::vector<std::pair<int, int>> pairs_from_json(const Json& arr, const char* what) {
  if (!arr.is_array()) throw DataError(std::string(what) + ": expected an array of pairs");
  std::vector<std::pair<int, int>> out;
  out.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw DataError(std::string(what) + ": each entry must be a pair of integers");
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}

double sigmoid_of(double logit) { return sigmoid(logit); }

}  // namespace

targets::TargetModel target_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ising") {
    const double beta = j.at("beta").get<double>();
    if (j.contains("L")) return targets::TargetModel(targets::IsingTarget::torus(j.at("L").get<int>(), beta));
    return targets::TargetModel(targets::IsingTarget::from_bonds(
        j.at("n").get<int>(), beta, pairs_from_json(j.at("bonds"), "ising bonds")));
  }
  if (kind == "sbm") {
    auto t = targets::SbmTarget::from_edges(
        j.at("n").get<int>(), pairs_from_json(j.at("edges"), "sbm edges"),
        sigmoid_of(j.at("omega_in_logit").get<double>()),
        sigmoid_of(j.at("omega_out_logit").get<double>()), j.at("learn_omega").get<bool>());
    // restore the exact logits (sigmoid/logit round trips can perturb ulps)
    t.omega_in_logit = j.at("omega_in_logit").get<double>();
    t.omega_out_logit = j.at("omega_out_logit").get<double>();
    return targets::TargetModel(std::move(t));
  }
  if (kind == "ranking") {
    return targets::TargetModel(targets::RankTarget::from_comparisons(
        j.at("n").get<int>(), pairs_from_json(j.at("comparisons"), "ranking comparisons"),
        j.at("w").get<double>(), j.at("learn_w").get<bool>()));
  }
  throw DataError("unknown target kind '" + kind + "'");
}

Json estimate_to_json(const vae::ElboEstimate& e) {
  Json j;
  j["mean"] = e.mean;
  j["stderr"] = e.stderr_;
  j["n_samples"] = e.n_samples;
  j["mode"] = e.mode == vae::ElboEstimate::Mode::kHard ? "hard" : "relaxed";
  return j;
}

// ---- model files -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'V', 'A', 'E', 'M', 'D', 'L', '1'};

struct TensorRef {
  const char* name;
  const Matrix* mat;
  const Vector* vec;
};

std::vector<TensorRef> model_tensors(const vae::Model& m) {
  return {
      {"decoder.w1", &m.decoder.net.w1, nullptr}, {"decoder.b1", nullptr, &m.decoder.net.b1},
      {"decoder.w2", &m.decoder.net.w2, nullptr}, {"decoder.b2", nullptr, &m.decoder.net.b2},
      {"encoder.w1", &m.encoder.net.w1, nullptr}, {"encoder.b1", nullptr, &m.encoder.net.b1},
      {"encoder.w2", &m.encoder.net.w2, nullptr}, {"encoder.b2", nullptr, &m.encoder.net.b2},
  };
}

void append_row_major(const Matrix& m, std::vector<double>& buf) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) buf.push_back(m(r, c));
}

}  // namespace

void save_model(const std::string& path, const targets::TargetModel& target,
                const vae::Model& model, const relax::RelaxConfig& rc) {
  Json header;
  header["artifact_version"] = kVersion;
  header["target"] = target_to_json(target);
  header["latent"] = Json{{"D", model.latent.D}};
  header["hidden"] = static_cast<std::int64_t>(model.decoder.net.hidden_dim());
  header["relax"] = Json{{"tau", rc.tau},
                         {"sigmoid_k", rc.sigmoid_k},
                         {"beta_mode", rc.beta_mode == relax::BetaMode::kBetaNewton
                                           ? "beta_newton"
                                           : "kumaraswamy"}};
  Json tensors = Json::array();
  std::vector<double> payload;
  for (const auto& t : model_tensors(model)) {
    Json tj;
    tj["name"] = t.name;
    if (t.mat) {
      tj["rows"] = static_cast<std::int64_t>(t.mat->rows());
      tj["cols"] = static_cast<std::int64_t>(t.mat->cols());
      append_row_major(*t.mat, payload);
    } else {
      tj["rows"] = static_cast<std::int64_t>(t.vec->size());
      tj["cols"] = 1;
      for (Index i = 0; i < t.vec->size(); ++i) payload.push_back((*t.vec)[i]);
    }
    tensors.push_back(tj);
  }
  header["tensors"] = tensors;

  const std::string head = canonical_dump(header);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write model file '" + path + "'");
  f.write(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = head.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!f) throw DataError("short write to model file '" + path + "'");
}

ModelFile load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file '" + path + "'");
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("'" + path + "' is not a partivae model file");
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!f || hlen == 0 || hlen > (1u << 26))
    throw DataError("model file '" + path + "': corrupt header length");
  std::string head(hlen, '\0');
  f.read(head.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw DataError("model file '" + path + "': truncated header");

  ModelFile mf;
  try {
    mf.header = Json::parse(head);
  } catch (const Json::parse_error& e) {
    throw DataError("model file '" + path + "': bad header: " + e.what());
  }
  mf.target = target_from_json(mf.header.at("target"));
  mf.model.latent.D = mf.header.at("latent").at("D").get<int>();
  const auto& rj = mf.header.at("relax");
  mf.relax.tau = rj.at("tau").get<double>();
  mf.relax.sigmoid_k = rj.at("sigmoid_k").get<double>();
  mf.relax.beta_mode = rj.at("beta_mode").get<std::string>() == "beta_newton"
                           ? relax::BetaMode::kBetaNewton
                           : relax::BetaMode::kKumaraswamy;

  const auto& tensors = mf.header.at("tensors");
  if (!tensors.is_array() || tensors.size() != 8)
    throw DataError("model file '" + path + "': expected 8 tensors");
  auto read_tensor = [&](const Json& tj, Matrix& out) {
    const Index rows = tj.at("rows").get<Index>();
    const Index cols = tj.at("cols").get<Index>();
    if (rows < 0 || cols < 0) throw DataError("model file '" + path + "': bad tensor shape");
    out.resize(rows, cols);
    std::vector<double> buf(static_cast<size_t>(rows * cols));
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!f) throw DataError("model file '" + path + "': truncated payload");
    size_t k = 0;
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) out(r, c) = buf[k++];
  };
  Matrix tmp;
  auto& dn = mf.model.decoder.net;
  auto& en = mf.model.encoder.net;
  read_tensor(tensors[0], dn.w1);
  read_tensor(tensors[1], tmp);
  dn.b1 = tmp.col(0);
  read_tensor(tensors[2], dn.w2);
  read_tensor(tensors[3], tmp);
  dn.b2 = tmp.col(0);
  read_tensor(tensors[4], en.w1);
  read_tensor(tensors[5], tmp);
  en.b1 = tmp.col(0);
  read_tensor(tensors[6], en.w2);
  read_tensor(tensors[7], tmp);
  en.b2 = tmp.col(0);

  // shape consistency against the declared target/latent
  const int n = mf.target.dim();
  const int want_out = mf.target.spin() ? n : 2 * n;
  if (dn.in_dim() != mf.model.latent.D || dn.out_dim() != want_out ||
      en.in_dim() != n || en.out_dim() != mf.model.latent.D)
    throw DimensionError("model file '" + path + "': tensor shapes disagree with target");
  if (!dn.all_finite() || !en.all_finite())
    throw DataError("model file '" + path + "': non-finite parameters");
  return mf;
}

// ---- CSV outputs --------------------------------------------------------------

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const std::string& path, const std::vector<double>& trace) {
  std::string s = "step,relaxed_elbo\n";
  for (size_t i = 0; i < trace.size(); ++i)
    s += std::to_string(i) + "," + fmt17(trace[i]) + "\n";
  write_text(path, s);
}

void write_samples_csv(const std::string& path, const std::vector<Vector>& samples, bool ranking,
                       int n_cols) {
  std::string s;
  for (int i = 0; i < n_cols; ++i) s += (i ? ",x" : "x") + std::to_string(i);
  s += "\n";
  for (const auto& row : samples) {
    for (Index i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      const long v = ranking ? std::lround(row[i] * static_cast<double>(row.size()))
                             : std::lround(row[i]);
      s += std::to_string(v);
    }
    s += "\n";
  }
  write_text(path, s);
}

void write_sweep_csv(const std::string& path, const vae::SweepResult& sweep) {
  std::string s = "D,mean,stderr,n_samples,best\n";
  for (size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    s += std::to_string(r.D) + "," + fmt17(r.estimate.mean) + "," + fmt17(r.estimate.stderr_) +
         "," + std::to_string(r.estimate.n_samples) + "," +
         (static_cast<int>(i) == sweep.best_index ? "1" : "0") + "\n";
  }
  write_text(path, s);
}

void write_site_means_csv(const std::string& path, const Vector& means) {
  std::string s = "site,mean\n";
  for (Index i = 0; i < means.size(); ++i) s += std::to_string(i) + "," + fmt17(means[i]) + "\n";
  write_text(path, s);
}

void write_pair_corr_csv(const std::string& path, const Matrix& corr) {
  std::string s = "i,j,corr\n";
  for (Index i = 0; i < corr.rows(); ++i)
    for (Index j = 0; j < corr.cols(); ++j)
      s += std::to_string(i) + "," + std::to_string(j) + "," + fmt17(corr(i, j)) + "\n";
  write_text(path, s);
}

void write_rank_position_csv(const std::string& path, const Matrix& position) {
  std::string s = "object,position,prob\n";
  for (Index i = 0; i < position.rows(); ++i)
    for (Index k = 0; k < position.cols(); ++k)
      s += std::to_string(i) + "," + std::to_string(k + 1) + "," + fmt17(position(i, k)) + "\n";
  write_text(path, s);
}

}  // namespace partivae::io
