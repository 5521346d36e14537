#include "otc/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "otc/error.hpp"

namespace otc {

namespace {

using nlohmann::json;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, const std::string& where) {
  const std::string text(trim(field));
  if (text.empty()) throw InvalidArgument(where + ": empty field");
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InvalidArgument(where + ": cannot parse '" + text + "'");
  }
  if (used != text.size()) throw InvalidArgument(where + ": cannot parse '" + text + "'");
  return value;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw InvalidArgument(std::string(what) + ": expected a nonempty array of rows");
  const std::size_t cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw InvalidArgument(std::string(what) + ": ragged rows");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

json triplets(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      if (m(i, k) != 0.0) out.push_back(json::array({i, k, m(i, k)}));
  return out;
}

Matrix from_triplets(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + ": expected triplets");
  Matrix m = Matrix::Zero(rows, cols);
  for (const json& t : j) {
    if (!t.is_array() || t.size() != 3) throw InvalidArgument(std::string(what) + ": malformed triplet");
    const auto i = t[0].get<Eigen::Index>(), k = t[1].get<Eigen::Index>();
    if (i < 0 || i >= rows || k < 0 || k >= cols) throw InvalidArgument(std::string(what) + ": index out of range");
    m(i, k) = t[2].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    while (true) {
      const std::size_t comma = body.find(',', start);
      row.push_back(parse_double(body.substr(start, comma - start), where));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgument(where + ": expected " + std::to_string(rows.front().size()) + " fields");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(path.string() + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

std::vector<std::size_t> read_sequence(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  std::vector<std::size_t> seq;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    std::size_t i = 0;
    while (i < body.size()) {
      const char ch = body[i];
      if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
        ++i;
        continue;
      }
      std::size_t value = 0;
      const auto [ptr, ec] = std::from_chars(body.data() + i, body.data() + body.size(), value);
      if (ec != std::errc() || ptr == body.data() + i)
        throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected a nonnegative integer");
      i = static_cast<std::size_t>(ptr - body.data());
      if (i < body.size() && body[i] != ',' && !std::isspace(static_cast<unsigned char>(body[i])))
        throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected a nonnegative integer");
      seq.push_back(value);
    }
  }
  return seq;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw InvalidArgument("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InvalidArgument("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

json solution_to_json(const OtcSolution& solution) {
  json j;
  j["d"] = solution.coupling.marginal_dim();
  j["cost"] = solution.cost;
  j["iterations"] = solution.iterations;
  j["stationary"] = vector_to_json(solution.stationary.weights());
  j["coupling"] = triplets(solution.coupling.matrix());
  if (solution.entropic) {
    const EntropicDiagnostics& e = *solution.entropic;
    j["xi"] = e.xi;
    j["L_used"] = e.L_used;
    j["T_used"] = e.T_used;
    j["sinkhorn_iters"] = e.sinkhorn_iters;
    j["stopped_by"] = e.stopped_by;
  }
  return j;
}

json hmm_to_json(const Hmm& model) {
  return json{{"d", model.hidden_dim()},
              {"m", model.alphabet_size()},
              {"transitions", matrix_to_json(model.transitions().matrix())},
              {"emissions", matrix_to_json(model.emissions())}};
}

Hmm hmm_from_json(const json& j) {
  try {
    const auto d = j.at("d").get<std::size_t>();
    const auto m = j.at("m").get<std::size_t>();
    Matrix t = matrix_from_json(j.at("transitions"), "transitions");
    Matrix e = matrix_from_json(j.at("emissions"), "emissions");
    if (static_cast<std::size_t>(t.rows()) != d || static_cast<std::size_t>(t.cols()) != d)
      throw InvalidArgument("hmm: transitions must be d x d");
    if (static_cast<std::size_t>(e.rows()) != d || static_cast<std::size_t>(e.cols()) != m)
      throw InvalidArgument("hmm: emissions must be d x m");
    return Hmm(TransitionMatrix::normalized(std::move(t)), std::move(e), 1e-6);
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("hmm: ") + ex.what());
  }
}

json coupled_to_json(const CoupledHmm& model) {
  json joint = json::array();
  for (const Matrix& theta : model.joint_emissions) joint.push_back(triplets(theta));
  return json{{"d", model.coupling.marginal_dim()},
              {"m_a", model.obs_cost.rows()},
              {"m_b", model.obs_cost.cols()},
              {"cost", model.cost},
              {"lifted_cost", matrix_to_json(model.lifted_cost.matrix())},
              {"obs_cost", matrix_to_json(model.obs_cost)},
              {"start", vector_to_json(model.start.weights())},
              {"coupling", triplets(model.coupling.matrix())},
              {"joint_emissions", std::move(joint)}};
}

CoupledHmm coupled_from_json(const json& j) {
  try {
    const auto d = j.at("d").get<std::size_t>();
    const auto ma = j.at("m_a").get<Eigen::Index>();
    const auto mb = j.at("m_b").get<Eigen::Index>();
    const auto n = static_cast<Eigen::Index>(d * d);
    const json& joint = j.at("joint_emissions");
    if (!joint.is_array() || joint.size() != d * d) throw InvalidArgument("coupled: need d^2 joint emissions");
    std::vector<Matrix> thetas;
    for (const json& t : joint) thetas.push_back(from_triplets(t, ma, mb, "joint_emissions"));
    const auto start = j.at("start").get<std::vector<double>>();
    return CoupledHmm{TransitionCoupling(d, from_triplets(j.at("coupling"), n, n, "coupling"), 1e-9),
                      std::move(thetas),
                      CostMatrix(matrix_from_json(j.at("lifted_cost"), "lifted_cost")),
                      matrix_from_json(j.at("obs_cost"), "obs_cost"),
                      Distribution(Eigen::Map<const Vector>(start.data(), static_cast<Eigen::Index>(start.size())), 1e-9),
                      j.at("cost").get<double>()};
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("coupled: ") + ex.what());
  }
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& ex) {
    throw InvalidArgument(path.string() + ": " + ex.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) { write_text_atomic(path, j.dump() + "\n"); }

std::string samples_to_csv(const std::vector<SampleRow>& rows) {
  std::string out = "step,hidden_x,hidden_y,obs_u,obs_v,pair_cost\n";
  for (const SampleRow& r : rows) {
    out += std::to_string(r.step) + ',' + std::to_string(r.hidden_x) + ',' + std::to_string(r.hidden_y) + ',' +
           std::to_string(r.obs_u) + ',' + std::to_string(r.obs_v) + ',' + format_double(r.pair_cost) + '\n';
  }
  return out;
}

}  // namespace otc
