#include <algorithm>
#include <numeric>

#include "orthovar/phonetics.hpp"
#include "orthovar/text.hpp"

namespace orthovar::phonetics {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(text::to_scalars(a), text::to_scalars(b));
}

std::size_t mphone_distance(std::string_view a, std::string_view b,
                            const MetaphoneOptions& options) {
  return levenshtein(metaphone(a, options), metaphone(b, options));
}

std::string EditOp::merged() const {
  switch (kind) {
    case EditKind::Sub: return source + "->" + target;
    case EditKind::Del: return "-" + source;
    case EditKind::Ins: return "+" + target;
  }
  return {};
}

EditSignature edit_signature(std::string_view standard, std::string_view observed) {
  const auto a = text::to_scalars(standard);
  const auto b = text::to_scalars(observed);
  const std::size_t n = a.size(), m = b.size();
  const std::size_t w = m + 1;

  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) d[i * w] = i;
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      d[i * w + j] = std::min({d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1,
                               d[(i - 1) * w + j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
  }

  // Alignment columns, collected back to front. A zero scalar marks a gap.
  struct Column {
    char32_t src;
    char32_t dst;
    std::size_t pos;  // index in standard at which this column sits
  };
  std::vector<Column> cols;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = d[i * w + j];
    if (i > 0 && j > 0 && here == d[(i - 1) * w + j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)) {
      cols.push_back({a[i - 1], b[j - 1], i - 1});
      --i;
      --j;
    } else if (j > 0 && here == d[i * w + j - 1] + 1) {
      cols.push_back({0, b[j - 1], i});
      --j;
    } else {
      cols.push_back({a[i - 1], 0, i - 1});
      --i;
    }
  }
  std::reverse(cols.begin(), cols.end());

  EditSignature sig;
  std::size_t c = 0;
  while (c < cols.size()) {
    const bool match = cols[c].src != 0 && cols[c].src == cols[c].dst;
    if (match) {
      ++c;
      continue;
    }
    std::u32string src, dst;
    const std::size_t pos = cols[c].pos;
    for (; c < cols.size() && !(cols[c].src != 0 && cols[c].src == cols[c].dst); ++c) {
      if (cols[c].src) src.push_back(cols[c].src);
      if (cols[c].dst) dst.push_back(cols[c].dst);
    }
    EditKind kind = src.empty() ? EditKind::Ins : dst.empty() ? EditKind::Del : EditKind::Sub;
    sig.ops.push_back({kind, text::to_utf8(src), text::to_utf8(dst), pos});
  }
  for (std::size_t k = 0; k < sig.ops.size(); ++k) {
    if (k) sig.merged += "; ";
    sig.merged += sig.ops[k].merged();
  }
  return sig;
}

std::string apply_edits(std::string_view standard, const std::vector<EditOp>& ops) {
  const auto a = text::to_scalars(standard);
  std::vector<const EditOp*> ordered;
  for (const auto& op : ops) ordered.push_back(&op);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const EditOp* x, const EditOp* y) { return x->position < y->position; });
  std::u32string out;
  std::size_t cursor = 0;
  for (const EditOp* op : ordered) {
    const auto src = text::to_scalars(op->source);
    if (op->position < cursor || op->position + src.size() > a.size() ||
        a.compare(op->position, src.size(), src) != 0) {
      throw std::invalid_argument("edit op '" + op->merged() + "' does not apply at position " +
                                  std::to_string(op->position));
    }
    out.append(a, cursor, op->position - cursor);
    out += text::to_scalars(op->target);
    cursor = op->position + src.size();
  }
  out.append(a, cursor, std::u32string::npos);
  return text::to_utf8(out);
}

}  // namespace orthovar::phonetics
