#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nncert/error.hpp"
#include "nncert/sdp.hpp"

namespace nncert::sdp {

std::string role_name(BlockRole role) {
  switch (role) {
    case BlockRole::Lyapunov:
      return "lyapunov";
    case BlockRole::UncertaintyBound:
      return "uncertainty_bound";
    case BlockRole::Containment:
      return "containment";
    case BlockRole::Definiteness:
      return "definiteness";
    case BlockRole::Generic:
      break;
  }
  return "generic";
}

namespace {

BlockRole parse_role(const std::string& s) {
  for (BlockRole r : {BlockRole::Generic, BlockRole::Lyapunov, BlockRole::UncertaintyBound,
                      BlockRole::Containment, BlockRole::Definiteness}) {
    if (role_name(r) == s) return r;
  }
  throw SchemaError("unknown block role '" + s + "'");
}

void scatter(Matrix& out, const std::vector<SymEntry>& entries, double scale) {
  for (const SymEntry& e : entries) {
    out(e.row, e.col) += scale * e.value;
    if (e.row != e.col) out(e.col, e.row) += scale * e.value;
  }
}

std::vector<SymEntry> to_entries(const Matrix& m) {
  std::vector<SymEntry> out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r <= c; ++r) {
      if (m(r, c) != 0.0) out.push_back({static_cast<int>(r), static_cast<int>(c), m(r, c)});
    }
  }
  return out;
}

void check_symmetric(const Matrix& m, int size, const std::string& what) {
  if (m.rows() != size || m.cols() != size) {
    throw DimensionError(what + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(size) + "x" +
                         std::to_string(size));
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw PreconditionError(what + " is not symmetric");
  }
}

}  // namespace

Matrix LmiBlock::evaluate(const Vector& y) const {
  Matrix out = Matrix::Zero(size, size);
  scatter(out, constant, 1.0);
  for (const VarTerm& t : terms) {
    if (y(t.var) != 0.0) scatter(out, t.coeff, y(t.var));
  }
  return out;
}

std::size_t LmiBlock::nnz() const {
  std::size_t total = constant.size();
  for (const VarTerm& t : terms) total += t.coeff.size();
  return total;
}

BlockBuilder::BlockBuilder(int size, std::string label, BlockRole role)
    : size_(size), label_(std::move(label)), role_(role) {
  if (size <= 0) throw DimensionError("LMI block size must be positive");
}

void BlockBuilder::add_constant(int i, int j, double value) { add(-1, i, j, value); }

void BlockBuilder::add(int var, int i, int j, double value) {
  if (i < 0 || j < 0 || i >= size_ || j >= size_) {
    throw DimensionError("block '" + label_ + "': entry (" + std::to_string(i) + "," +
                         std::to_string(j) + ") outside a " + std::to_string(size_) +
                         "-square block");
  }
  if (value == 0.0) return;
  raw_.push_back({var, std::min(i, j), std::max(i, j), sign_ * value});
}

void BlockBuilder::add_margin(double margin) {
  for (int i = 0; i < size_; ++i) raw_.push_back({-1, i, i, -margin});
  margin_ += margin;
}

LmiBlock BlockBuilder::build() && {
  std::sort(raw_.begin(), raw_.end(), [](const Raw& a, const Raw& b) {
    if (a.var != b.var) return a.var < b.var;
    if (a.col != b.col) return a.col < b.col;
    return a.row < b.row;
  });
  LmiBlock block;
  block.label = std::move(label_);
  block.role = role_;
  block.size = size_;
  block.strict_margin = margin_;
  for (std::size_t i = 0; i < raw_.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < raw_.size() && raw_[j].var == raw_[i].var && raw_[j].row == raw_[i].row &&
           raw_[j].col == raw_[i].col) {
      sum += raw_[j].value;
      ++j;
    }
    if (sum != 0.0) {
      const SymEntry e{raw_[i].row, raw_[i].col, sum};
      if (raw_[i].var < 0) {
        block.constant.push_back(e);
      } else {
        if (block.terms.empty() || block.terms.back().var != raw_[i].var) {
          block.terms.push_back({raw_[i].var, {}});
        }
        block.terms.back().coeff.push_back(e);
      }
    }
    i = j;
  }
  raw_.clear();
  return block;
}

int ConicProgram::add_variable(std::string label, double objective, bool nonneg) {
  const int index = num_vars();
  objective_.push_back(objective);
  labels_.push_back(std::move(label));
  is_nonneg_.push_back(0);
  if (nonneg) mark_nonneg(index);
  return index;
}

void ConicProgram::set_objective(int var, double c) {
  if (var < 0 || var >= num_vars()) throw DimensionError("objective index out of range");
  objective_[static_cast<std::size_t>(var)] = c;
}

void ConicProgram::mark_nonneg(int var) {
  if (var < 0 || var >= num_vars()) throw DimensionError("nonneg index out of range");
  if (!is_nonneg_[static_cast<std::size_t>(var)]) {
    is_nonneg_[static_cast<std::size_t>(var)] = 1;
    nonneg_.push_back(var);
  }
}

void ConicProgram::add_psd_block(const Matrix& F0,
                                 const std::vector<std::pair<int, Matrix>>& coefficients,
                                 std::string label, BlockRole role) {
  const int size = static_cast<int>(F0.rows());
  check_symmetric(F0, size, "constant term");
  LmiBlock block;
  block.label = std::move(label);
  block.role = role;
  block.size = size;
  block.constant = to_entries(0.5 * (F0 + F0.transpose()));
  std::vector<std::pair<int, Matrix>> sorted = coefficients;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [var, Fk] : sorted) {
    if (var < 0 || var >= num_vars()) {
      throw DimensionError("coefficient refers to unknown variable " + std::to_string(var));
    }
    check_symmetric(Fk, size, "coefficient of variable " + std::to_string(var));
    std::vector<SymEntry> e = to_entries(0.5 * (Fk + Fk.transpose()));
    if (!block.terms.empty() && block.terms.back().var == var) {
      throw PreconditionError("variable " + std::to_string(var) + " listed twice in one block");
    }
    if (!e.empty()) block.terms.push_back({var, std::move(e)});
  }
  add_block(std::move(block));
}

void ConicProgram::add_block(LmiBlock block) {
  if (block.size <= 0) throw DimensionError("LMI block size must be positive");
  for (const VarTerm& t : block.terms) {
    if (t.var < 0 || t.var >= num_vars()) {
      throw DimensionError("block '" + block.label + "' refers to unknown variable " +
                           std::to_string(t.var));
    }
  }
  blocks_.push_back(std::move(block));
}

std::size_t ConicProgram::total_block_size() const {
  std::size_t total = 0;
  for (const LmiBlock& b : blocks_) total += static_cast<std::size_t>(b.size);
  return total;
}

void ConicProgram::write_triplets(std::ostream& os) const {
  os << "# nncert conic program: minimize c'y s.t. F0 + sum y_k F_k >= 0 per block\n";
  os << "# entry lines: <block> <row> <col> <variable> <coefficient>, 1-based, "
        "variable 0 = constant, upper triangle only\n";
  os << std::setprecision(17);
  os << "vars " << num_vars() << "\n";
  for (int k = 0; k < num_vars(); ++k) {
    os << "var " << (k + 1) << " " << objective_[static_cast<std::size_t>(k)] << " "
       << (is_nonneg_[static_cast<std::size_t>(k)] ? 1 : 0) << " "
       << (labels_[static_cast<std::size_t>(k)].empty() ? "-" : labels_[static_cast<std::size_t>(k)])
       << "\n";
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const LmiBlock& blk = blocks_[b];
    os << "block " << (b + 1) << " " << blk.size << " " << role_name(blk.role) << " "
       << blk.strict_margin << " " << (blk.label.empty() ? "-" : blk.label) << "\n";
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const LmiBlock& blk = blocks_[b];
    for (const SymEntry& e : blk.constant) {
      os << (b + 1) << " " << (e.row + 1) << " " << (e.col + 1) << " 0 " << e.value << "\n";
    }
    for (const VarTerm& t : blk.terms) {
      for (const SymEntry& e : t.coeff) {
        os << (b + 1) << " " << (e.row + 1) << " " << (e.col + 1) << " " << (t.var + 1) << " "
           << e.value << "\n";
      }
    }
  }
}

ConicProgram ConicProgram::read_triplets(std::istream& is) {
  ConicProgram p;
  std::string line;
  std::vector<LmiBlock> blocks;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw SchemaError("triplet line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "vars") {
      continue;
    } else if (head == "var") {
      int idx = 0, nonneg = 0;
      double c = 0.0;
      std::string label;
      if (!(ls >> idx >> c >> nonneg >> label)) fail("malformed var record");
      if (idx != p.num_vars() + 1) fail("variables must be listed in order");
      p.add_variable(label == "-" ? "" : label, c, nonneg != 0);
    } else if (head == "block") {
      int idx = 0, size = 0;
      double margin = 0.0;
      std::string role, label;
      if (!(ls >> idx >> size >> role >> margin >> label)) fail("malformed block record");
      if (idx != static_cast<int>(blocks.size()) + 1) fail("blocks must be listed in order");
      LmiBlock b;
      b.size = size;
      b.role = parse_role(role);
      b.strict_margin = margin;
      b.label = label == "-" ? "" : label;
      blocks.push_back(std::move(b));
    } else {
      int b = 0, r = 0, c = 0, v = 0;
      double value = 0.0;
      std::istringstream es(line);
      if (!(es >> b >> r >> c >> v >> value)) fail("malformed entry");
      if (b < 1 || b > static_cast<int>(blocks.size())) fail("unknown block");
      LmiBlock& blk = blocks[static_cast<std::size_t>(b - 1)];
      if (r < 1 || c < r || c > blk.size) fail("entry outside upper triangle");
      if (v < 0 || v > p.num_vars()) fail("unknown variable");
      const SymEntry e{r - 1, c - 1, value};
      if (v == 0) {
        blk.constant.push_back(e);
      } else {
        if (blk.terms.empty() || blk.terms.back().var != v - 1) {
          if (!blk.terms.empty() && blk.terms.back().var > v - 1) fail("variables out of order");
          blk.terms.push_back({v - 1, {}});
        }
        blk.terms.back().coeff.push_back(e);
      }
    }
  }
  for (LmiBlock& b : blocks) p.add_block(std::move(b));
  return p;
}

}  // namespace nncert::sdp
