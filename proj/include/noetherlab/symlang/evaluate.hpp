#pragma once

#include "noetherlab/symlang/expr.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nlab::sym {

class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Key under which the precomputed domain mean of mean(g) is bound: the DSL
/// text of g.
inline std::string mean_key(const Expr& integrand) { return to_string(integrand); }

/// Values for one site. Conjugated symbols are not bound separately: the
/// conjugate of a bound value is used, which keeps phi and conj(phi) exact
/// conjugates of each other.
struct SymbolBinding {
    std::map<std::string, complex> fields;
    std::map<std::pair<std::string, int>, complex> derivs;
    std::map<std::string, complex> params;
    std::map<std::string, complex> means;
    std::vector<double> coords;
};

namespace detail {

inline complex eval_impl(const Expr& e, const SymbolBinding& b)
{
    switch (e.kind()) {
        case Kind::Const:
            return e.value();
        case Kind::Param: {
            auto it = b.params.find(e.name());
            if (it == b.params.end()) throw EvaluationError("unbound parameter '" + e.name() + "'");
            return it->second;
        }
        case Kind::Coord:
            if (e.axis() < 0 || static_cast<std::size_t>(e.axis()) >= b.coords.size())
                throw EvaluationError("unbound coordinate x(" + std::to_string(e.axis()) + ")");
            return b.coords[static_cast<std::size_t>(e.axis())];
        case Kind::Field: {
            auto it = b.fields.find(e.name());
            if (it == b.fields.end()) throw EvaluationError("unbound field '" + e.name() + "'");
            return it->second;
        }
        case Kind::FieldDeriv: {
            auto it = b.derivs.find({e.name(), e.axis()});
            if (it == b.derivs.end())
                throw EvaluationError("unbound derivative d(" + e.name() + "," + std::to_string(e.axis()) + ")");
            return it->second;
        }
        case Kind::Conj:
            return std::conj(eval_impl(e.child(), b));
        case Kind::Sum: {
            complex acc(0.0, 0.0);
            for (const auto& c : e.children()) acc += eval_impl(c, b);
            return acc;
        }
        case Kind::Product: {
            complex acc(1.0, 0.0);
            for (const auto& c : e.children()) acc *= eval_impl(c, b);
            return acc;
        }
        case Kind::Power: {
            const complex base = eval_impl(e.child(), b);
            const int n = e.exponent();
            complex acc(1.0, 0.0);
            for (int k = 0; k < (n < 0 ? -n : n); ++k) acc *= base;
            return n < 0 ? complex(1.0, 0.0) / acc : acc;
        }
        case Kind::Mean: {
            auto it = b.means.find(mean_key(e.child()));
            if (it == b.means.end()) throw EvaluationError("unbound mean(" + mean_key(e.child()) + ")");
            return it->second;
        }
    }
    throw EvaluationError("unknown node kind");
}

inline void collect_means_impl(const Expr& e, std::vector<Expr>& out, std::set<std::string>& seen)
{
    if (e.kind() == Kind::Mean) {
        if (seen.insert(mean_key(e.child())).second) out.push_back(e.child());
        return;
    }
    for (const auto& c : e.children()) collect_means_impl(c, out, seen);
}

}  // namespace detail

/// Children are combined left to right, so repeated evaluation is bitwise
/// reproducible.
inline complex evaluate(const Expr& e, const SymbolBinding& b) { return detail::eval_impl(e, b); }

/// Distinct mean(...) integrands in depth-first source order.
inline std::vector<Expr> collect_means(const Expr& e)
{
    std::vector<Expr> out;
    std::set<std::string> seen;
    detail::collect_means_impl(e, out, seen);
    return out;
}

}  // namespace nlab::sym
