#include "qtt/trainshape.hpp"

#include <algorithm>
#include <sstream>

#include "qtt/errors.hpp"

namespace qtt {

TrainShape::TrainShape(std::vector<Dimension> dims, std::vector<DigitGroup> groups,
                       std::vector<std::size_t> ranks)
    : dims_(std::move(dims)), groups_(std::move(groups)), ranks_(std::move(ranks)) {
    if (dims_.empty()) {
        if (groups_.size() != 1 || !groups_.front().empty())
            throw ShapeError("scalar shape must consist of exactly one empty group");
    } else {
        if (groups_.empty()) throw ShapeError("shape has no cores");
        std::vector<std::vector<int>> seen(dims_.size());
        for (std::size_t d = 0; d < dims_.size(); ++d) seen[d].assign(dims_[d].ndigits(), 0);
        std::vector<std::vector<std::size_t>> order(dims_.size());
        for (std::size_t q = 0; q < groups_.size(); ++q) {
            if (groups_[q].empty()) throw ShapeError("core " + std::to_string(q) + " carries no digits");
            for (const auto& ref : groups_[q]) {
                if (ref.dim >= dims_.size() || ref.pos >= dims_[ref.dim].ndigits())
                    throw ShapeError("core " + std::to_string(q) + " references a missing digit");
                if (seen[ref.dim][ref.pos]++)
                    throw ShapeError("digit " + std::to_string(ref.pos) + " of dimension " +
                                     std::to_string(ref.dim) + " appears twice");
                order[ref.dim].push_back(ref.pos);
            }
        }
        for (std::size_t d = 0; d < dims_.size(); ++d) {
            if (order[d].size() != dims_[d].ndigits())
                throw ShapeError("dimension " + std::to_string(d) + " has digits missing from the shape");
            const auto& o = order[d];
            const bool up = std::is_sorted(o.begin(), o.end());
            const bool down = std::is_sorted(o.rbegin(), o.rend());
            if (!up && !down)
                throw ShapeError("digits of dimension " + std::to_string(d) + " are out of order");
        }
    }

    if (ranks_.empty()) ranks_.assign(groups_.size() + 1, 1);
    if (ranks_.size() != groups_.size() + 1) throw ShapeError("rank vector length must be ncores+1");
    if (ranks_.front() != 1 || ranks_.back() != 1) throw ShapeError("terminal ranks must be 1");
    for (auto r : ranks_)
        if (r == 0) throw ShapeError("ranks must be positive");

    placement_.resize(groups_.size());
    for (std::size_t q = 0; q < groups_.size(); ++q) {
        std::size_t stride = 1;
        auto& pl = placement_[q];
        pl.resize(groups_[q].size());
        for (std::size_t k = groups_[q].size(); k-- > 0;) {
            const auto& ref = groups_[q][k];
            pl[k] = Placement{ref.dim, ref.pos, stride};
            stride *= dims_[ref.dim][ref.pos].base;
        }
    }
}

std::size_t TrainShape::max_rank() const { return *std::max_element(ranks_.begin(), ranks_.end()); }

std::size_t TrainShape::core_extent(std::size_t q) const {
    std::size_t e = 1;
    for (const auto& ref : groups_.at(q)) e *= dims_[ref.dim][ref.pos].base;
    return e;
}

std::vector<std::size_t> TrainShape::core_bases(std::size_t q) const {
    std::vector<std::size_t> b;
    for (const auto& ref : groups_.at(q)) b.push_back(dims_[ref.dim][ref.pos].base);
    return b;
}

std::size_t TrainShape::size() const {
    std::size_t s = 1;
    for (const auto& d : dims_) s *= d.size();
    return s;
}

std::vector<std::size_t> TrainShape::sizes() const {
    std::vector<std::size_t> s;
    for (const auto& d : dims_) s.push_back(d.size());
    return s;
}

TrainShape TrainShape::with_ranks(std::vector<std::size_t> ranks) const {
    TrainShape s = *this;
    if (ranks.size() != groups_.size() + 1) throw ShapeError("rank vector length must be ncores+1");
    if (ranks.front() != 1 || ranks.back() != 1) throw ShapeError("terminal ranks must be 1");
    s.ranks_ = std::move(ranks);
    return s;
}

bool TrainShape::compatible(const TrainShape& other) const {
    return dims_ == other.dims_ && groups_ == other.groups_;
}

std::pair<std::size_t, std::size_t> TrainShape::locate(DigitRef ref) const {
    for (std::size_t q = 0; q < groups_.size(); ++q)
        for (std::size_t k = 0; k < groups_[q].size(); ++k)
            if (groups_[q][k] == ref) return {q, k};
    throw ShapeError("digit not present in shape");
}

void TrainShape::local_indices(std::span<const std::size_t> idxs, std::span<std::size_t> out) const {
    for (std::size_t q = 0; q < placement_.size(); ++q) {
        std::size_t s = 0;
        for (const auto& p : placement_[q]) {
            const auto& dig = dims_[p.dim][p.pos];
            s += ((idxs[p.dim] / dig.factor) % dig.base) * p.stride;
        }
        out[q] = s;
    }
}

void TrainShape::dim_indices(std::span<const std::size_t> local, std::span<std::size_t> out) const {
    std::fill(out.begin(), out.end(), 0);
    for (std::size_t q = 0; q < placement_.size(); ++q) {
        for (const auto& p : placement_[q]) {
            const auto& dig = dims_[p.dim][p.pos];
            out[p.dim] += ((local[q] / p.stride) % dig.base) * dig.factor;
        }
    }
}

std::string TrainShape::describe() const {
    std::ostringstream os;
    os << "dims [";
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        os << (d ? "; " : "");
        const auto b = dims_[d].bases();
        for (std::size_t k = 0; k < b.size(); ++k) os << (k ? "x" : "") << b[k];
    }
    os << "] cores ";
    for (const auto& g : groups_) {
        os << "(";
        for (std::size_t k = 0; k < g.size(); ++k) os << (k ? "," : "") << g[k].dim << ":" << g[k].pos;
        os << ")";
    }
    os << " ranks [";
    for (std::size_t k = 0; k < ranks_.size(); ++k) os << (k ? "," : "") << ranks_[k];
    os << "]";
    return os.str();
}

TrainShape make_trainshape(std::vector<Dimension> dims, LayoutMode mode, std::vector<DigitGroup> groups) {
    if (mode == LayoutMode::Explicit || (!groups.empty() && mode == LayoutMode::Auto))
        return TrainShape(std::move(dims), std::move(groups));
    if (dims.empty()) return TrainShape({}, {DigitGroup{}});

    bool equal_counts = true;
    for (const auto& d : dims) equal_counts &= d.ndigits() == dims.front().ndigits();
    if (mode == LayoutMode::Auto)
        mode = (dims.size() > 1 && equal_counts) ? LayoutMode::Interleaved : LayoutMode::Block;

    std::vector<DigitGroup> g;
    if (mode == LayoutMode::Block) {
        for (std::size_t d = 0; d < dims.size(); ++d)
            for (std::size_t p = 0; p < dims[d].ndigits(); ++p) g.push_back({DigitRef{d, p}});
    } else {
        if (!equal_counts) throw ShapeError("interleaved layout needs equal digit counts");
        for (std::size_t p = 0; p < dims.front().ndigits(); ++p) {
            DigitGroup grp;
            for (std::size_t d = 0; d < dims.size(); ++d) grp.push_back(DigitRef{d, p});
            g.push_back(std::move(grp));
        }
    }
    return TrainShape(std::move(dims), std::move(g));
}

TrainShape make_trainshape(long long size) { return make_trainshape({make_dimension(size)}); }

} // namespace qtt
