#include "sped/engine.hpp"

#include <algorithm>
#include <istream>
#include <string>
#include <unordered_set>

namespace sped {

const NodePtr* NormNode::follower_at(std::uint32_t at) const {
    auto it = std::lower_bound(followers_.begin(), followers_.end(), at,
                               [](const Follower& f, std::uint32_t v) { return f.at < v; });
    if (it == followers_.end() || it->at != at) return nullptr;
    return &it->node;
}

StepContext::StepContext(const Grammar& g, EngineOptions opts)
    : g_(&g), nt_(compute_nullability(g)), opts_(opts) {
    WellFormedness wf = check_well_formed(g, compute_expansions(g, nt_));
    if (!wf.ok) {
        std::string msg = "grammar is not well formed";
        if (!wf.cycles.empty()) {
            msg += "; left cycle:";
            for (const std::string& n : wf.cycles.front().names) msg += " " + n;
        }
        throw std::invalid_argument(msg);
    }
    fail_ = fresh(NodeKind::Fail);
}

void StepContext::begin_step(std::uint32_t i) {
    index_ = i;
    derive_memo_.clear();
    norm_memo_.clear();
    intern_.clear();
    stats_ = StepStats{};
}

NodePtr StepContext::fresh(NodeKind k) {
    ++stats_.nodes_created;
    return std::make_shared<NormNode>(NormNode::Private{}, k, next_id_++);
}

NodePtr StepContext::intern(NodePtr n) {
    if (!opts_.hash_cons) return n;
    std::string key;
    key += static_cast<char>('0' + static_cast<int>(n->kind()));
    key += '|';
    switch (n->kind()) {
    case NodeKind::Char: key += std::to_string(n->byte()); break;
    case NodeKind::Empty: key += std::to_string(n->at()); break;
    case NodeKind::Fail: break;
    case NodeKind::Not:
        key += std::to_string(n->at());
        key += '|';
        key += std::to_string(n->child()->id());
        break;
    case NodeKind::Seq:
        key += std::to_string(n->first()->id());
        key += '|';
        key += std::to_string(reinterpret_cast<std::uintptr_t>(n->tail_template().get()));
        for (const Follower& f : n->followers()) {
            key += '|';
            key += std::to_string(f.at);
            key += ':';
            key += std::to_string(f.node->id());
        }
        break;
    case NodeKind::Alt:
        key += std::to_string(n->first()->id());
        key += '|';
        key += std::to_string(n->second()->id());
        break;
    }
    auto [it, inserted] = intern_.emplace(std::move(key), n);
    if (!inserted) --stats_.nodes_created; // deduplicated
    return it->second;
}

NodePtr StepContext::make_char(std::uint8_t byte) {
    NodePtr n = fresh(NodeKind::Char);
    const_cast<NormNode*>(n.get())->byte_ = byte;
    return intern(std::move(n));
}

NodePtr StepContext::make_empty_at(std::uint32_t at) {
    if (at > index_) throw engine_error("empty-match index beyond the current step");
    NodePtr n = fresh(NodeKind::Empty);
    auto* m = const_cast<NormNode*>(n.get());
    m->at_ = at;
    m->back_ = IndexSet::single(at);
    m->match_ = IndexSet::single(at);
    m->cant_fail_ = true;
    return intern(std::move(n));
}

NodePtr StepContext::make_fail() { return fail_; }

NodePtr StepContext::make_not_at(std::uint32_t at, NodePtr child) {
    if (at > index_) throw engine_error("lookahead index beyond the current step");
    if (!child) throw engine_error("lookahead without an operand");
    NodePtr n = fresh(NodeKind::Not);
    auto* m = const_cast<NormNode*>(n.get());
    m->at_ = at;
    m->a_ = std::move(child);
    m->back_ = IndexSet::single(at);
    return intern(std::move(n));
}

NodePtr StepContext::make_seq(NodePtr first, ExprPtr tail, std::vector<Follower> followers) {
    if (!first || !tail) throw engine_error("sequence without components");
    for (std::size_t i = 0; i < followers.size(); ++i) {
        if (followers[i].at > index_)
            throw engine_error("follower index beyond the current step");
        if (i > 0 && followers[i - 1].at >= followers[i].at)
            throw engine_error("follower indices not strictly ascending");
        if (!followers[i].node) throw engine_error("null follower");
    }
    NodePtr n = fresh(NodeKind::Seq);
    auto* m = const_cast<NormNode*>(n.get());
    for (const Follower& f : followers) m->back_.unite(f.node->back());
    for (std::uint32_t j : first->match_set().values()) {
        const Follower* hit = nullptr;
        for (const Follower& f : followers) {
            if (f.at == j) { hit = &f; break; }
        }
        if (!hit) throw engine_error("sequence matched at an index with no follower");
        m->match_.unite(hit->node->match_set());
    }
    if (m->match_.size() > 1) throw engine_error("sequence with more than one match index");
    if (!m->match_.subset_of(m->back_)) throw engine_error("match escaped the back set");
    // The sequence can no longer fail if its head cannot, every saved tail
    // cannot, and tails yet to be instantiated never can (nu of the template).
    m->cant_fail_ = first->cant_fail() && nt_.nu(tail);
    for (const Follower& f : followers)
        m->cant_fail_ = m->cant_fail_ && f.node->cant_fail();
    m->a_ = std::move(first);
    m->template_ = std::move(tail);
    m->followers_ = std::move(followers);
    return intern(std::move(n));
}

NodePtr StepContext::make_alt(NodePtr first, NodePtr second) {
    if (!first || !second) throw engine_error("choice without components");
    NodePtr n = fresh(NodeKind::Alt);
    auto* m = const_cast<NormNode*>(n.get());
    m->back_ = first->back();
    m->back_.unite(second->back());
    m->match_ = second->match_set();
    if (!m->match_.subset_of(m->back_)) throw engine_error("match escaped the back set");
    m->cant_fail_ = first->cant_fail() || second->cant_fail();
    m->a_ = std::move(first);
    m->b_ = std::move(second);
    return intern(std::move(n));
}

NodePtr StepContext::normalize(const ExprPtr& e) {
    auto it = norm_memo_.find(e);
    if (it != norm_memo_.end()) return it->second;
    NodePtr result;
    switch (e->kind()) {
    case ExprKind::Char:
        result = make_char(e->byte());
        break;
    case ExprKind::Empty:
        result = make_empty_at(index_);
        break;
    case ExprKind::Fail:
        result = fail_;
        break;
    case ExprKind::Nonterm: {
        const ExprPtr* body = g_->find(e->name());
        if (!body) throw engine_error("reference to unknown rule " + e->name());
        result = normalize(*body);
        break;
    }
    case ExprKind::Not:
        result = make_not_at(index_, normalize(e->child()));
        break;
    case ExprKind::Seq: {
        NodePtr first = normalize(e->first());
        // The tail stays a template. Its state is saved as a follower exactly
        // when the first component can match while consuming nothing beyond
        // the current index, i.e. when back(first) = {index}.
        bool save_tail = opts_.follower_on_second ? nt_.lambda(e->second())
                                                  : nt_.lambda(e->first());
        std::vector<Follower> followers;
        if (save_tail) followers.push_back({index_, normalize(e->second())});
        result = make_seq(std::move(first), e->second(), std::move(followers));
        break;
    }
    case ExprKind::Alt:
        result = make_alt(normalize(e->first()), normalize(e->second()));
        break;
    }
    norm_memo_.emplace(e, result);
    return result;
}

NodePtr StepContext::derive(const NodePtr& n, Symbol c) {
    if (n->is_terminal()) return n; // empty-match and fail are fixed points
    auto memo = derive_memo_.find(n->id());
    if (memo != derive_memo_.end()) return memo->second;
    ++stats_.derive_calls;

    NodePtr result;
    switch (n->kind()) {
    case NodeKind::Char:
        result = (!c.is_end() && c.byte() == n->byte()) ? make_empty_at(index_) : fail_;
        break;
    case NodeKind::Not: {
        // A live operand's match set is provisional: it can be withdrawn when a
        // nested choice commits the other way, so a nonempty match set does not
        // justify the veto. An operand that can no longer fail does: the
        // lookahead can then never succeed, whatever input follows.
        NodePtr d = derive(n->child(), c);
        if (d->cant_fail()) result = fail_;                     // operand will match: veto
        else if (d->is_fail()) result = make_empty_at(n->at()); // operand dead: accept
        else result = make_not_at(n->at(), std::move(d));
        break;
    }
    case NodeKind::Seq: {
        NodePtr d = derive(n->first(), c);
        if (d->is_fail()) {
            ++stats_.seq_branch[0];
            result = fail_;
        } else if (d->is_empty()) {
            std::uint32_t j = d->at();
            if (j > index_) throw engine_error("sequence head matched beyond the current step");
            if (j == index_) {
                // head consumed everything up to here: the tail starts fresh
                if (!c.is_end()) {
                    ++stats_.seq_branch[1];
                    result = normalize(n->tail_template());
                } else {
                    ++stats_.seq_branch[2];
                    result = derive(normalize(n->tail_template()), c);
                }
            } else {
                // head stopped consuming at j < index: resume the saved tail
                ++stats_.seq_branch[3];
                const NodePtr* f = n->follower_at(j);
                if (!f)
                    throw engine_error("no follower saved for match index " + std::to_string(j));
                result = derive(*f, c);
            }
        } else {
            // still parsing the head: keep followers its back set needs
            ++stats_.seq_branch[4];
            std::vector<Follower> fol;
            fol.reserve(d->back().size());
            for (std::uint32_t j : d->back().values()) {
                if (j == index_) {
                    fol.push_back({j, normalize(n->tail_template())});
                } else {
                    const NodePtr* f = n->follower_at(j);
                    if (!f)
                        throw engine_error("no follower saved for back index " +
                                           std::to_string(j));
                    fol.push_back({j, derive(*f, c)});
                }
            }
            result = make_seq(std::move(d), n->tail_template(), std::move(fol));
        }
        break;
    }
    case NodeKind::Alt: {
        // Commit to the first branch only once it can no longer fail; the
        // second branch is reachable only through a failure that will never
        // come. A nonempty match set on a live node is not enough: such
        // matches are provisional and can evaporate, which would wrongly
        // discard the second branch and with it the fallback result. Dropping
        // resolved fallbacks here is also what keeps the live graph bounded on
        // repetition, whose normalized form stacks one fallback per element.
        NodePtr da = derive(n->first(), c);
        if (da->is_fail()) {
            result = derive(n->second(), c);
        } else if (da->cant_fail()) {
            result = std::move(da); // committed: the alternative is unreachable
        } else {
            NodePtr db = derive(n->second(), c);
            if (db->is_fail()) result = std::move(da);
            else result = make_alt(std::move(da), std::move(db));
        }
        break;
    }
    case NodeKind::Empty:
    case NodeKind::Fail:
        result = n; // unreachable; handled above
        break;
    }
    derive_memo_.emplace(n->id(), result);
    return result;
}

namespace {

bool check_rec(const NormNode* n, std::uint32_t k, std::unordered_set<const NormNode*>& seen) {
    if (!seen.insert(n).second) return true;
    switch (n->kind()) {
    case NodeKind::Char:
    case NodeKind::Fail: return true;
    case NodeKind::Empty: return n->at() <= k;
    case NodeKind::Not: return n->at() <= k && check_rec(n->child().get(), k, seen);
    case NodeKind::Alt:
        return check_rec(n->first().get(), k, seen) && check_rec(n->second().get(), k, seen);
    case NodeKind::Seq: {
        IndexSet at_set;
        for (const Follower& f : n->followers()) {
            if (f.at > k) return false;
            at_set.insert(f.at);
        }
        if (at_set.size() != n->followers().size()) return false; // duplicates
        if (!(at_set == n->first()->back())) return false;
        if (!check_rec(n->first().get(), k, seen)) return false;
        for (const Follower& f : n->followers()) {
            if (!check_rec(f.node.get(), k, seen)) return false;
        }
        return true;
    }
    }
    return false;
}

} // namespace

bool check_normalized(const NodePtr& n, std::uint32_t k) {
    std::unordered_set<const NormNode*> seen;
    return check_rec(n.get(), k, seen);
}

namespace {

std::uint64_t stats_rec(const NormNode* n, DagStats& s,
                        std::unordered_map<const NormNode*, std::uint64_t>& depth) {
    auto it = depth.find(n);
    if (it != depth.end()) return it->second;
    ++s.live_nodes;
    ++s.by_kind[static_cast<std::size_t>(n->kind())];
    std::uint64_t d = 0;
    switch (n->kind()) {
    case NodeKind::Char:
    case NodeKind::Empty:
    case NodeKind::Fail: break;
    case NodeKind::Not: d = stats_rec(n->child().get(), s, depth); break;
    case NodeKind::Alt:
        d = std::max(stats_rec(n->first().get(), s, depth),
                     stats_rec(n->second().get(), s, depth));
        break;
    case NodeKind::Seq: {
        s.max_followers = std::max<std::uint64_t>(s.max_followers, n->followers().size());
        d = stats_rec(n->first().get(), s, depth);
        for (const Follower& f : n->followers()) {
            d = std::max(d, stats_rec(f.node.get(), s, depth));
        }
        break;
    }
    }
    std::uint64_t out = d + 1;
    depth[n] = out;
    s.depth = std::max(s.depth, out);
    return out;
}

} // namespace

DagStats dag_stats(const NodePtr& n) {
    DagStats s;
    if (!n) return s;
    std::unordered_map<const NormNode*, std::uint64_t> depth;
    stats_rec(n.get(), s, depth);
    return s;
}

namespace {

// Core loop shared by the buffered and streaming fronts. `next` yields one
// byte at a time and is not called again once the outcome is decided.
template <typename NextByte>
RecognitionOutcome recognize_impl(const Grammar& g, NextByte&& next,
                                  const RecognizeOptions& opts) {
    StepContext ctx(g, opts.engine);
    RecognitionOutcome out;

    ctx.begin_step(0);
    NodePtr node = ctx.normalize(g.start());

    auto record = [&](std::uint32_t step, std::int32_t symbol) {
        out.nodes_created += ctx.stats().nodes_created;
        out.derive_calls += ctx.stats().derive_calls;
        for (std::size_t b = 0; b < out.seq_branch.size(); ++b)
            out.seq_branch[b] += ctx.stats().seq_branch[b];
        StepRecord r;
        r.step = step;
        r.symbol = symbol;
        r.nodes_created = ctx.stats().nodes_created;
        if (opts.collect_stats) {
            DagStats ds = dag_stats(node);
            r.live_nodes = ds.live_nodes;
            r.max_followers = ds.max_followers;
            out.peak_live_nodes = std::max(out.peak_live_nodes, ds.live_nodes);
            out.max_followers_seen = std::max(out.max_followers_seen, ds.max_followers);
            out.trail.push_back(r);
        }
        if (opts.on_step) opts.on_step(r);
    };
    auto validate = [&](std::uint32_t k, const IndexSet* prev_back) {
        if (!opts.validate) return;
        if (!check_normalized(node, k))
            throw engine_error("node not normalized after step " + std::to_string(k));
        if (prev_back) {
            IndexSet allowed = *prev_back;
            allowed.insert(k);
            if (!node->back().subset_of(allowed))
                throw engine_error("back set grew beyond the current step");
        }
    };

    validate(0, nullptr);
    record(0, -2);

    std::uint32_t k = 0;
    std::uint8_t byte = 0;
    while (!node->is_terminal() && next(byte)) {
        if (k == UINT32_MAX - 1) throw std::invalid_argument("input too long to index");
        ++k;
        ctx.begin_step(k);
        IndexSet prev_back;
        if (opts.validate) prev_back = node->back();
        node = ctx.derive(node, Symbol::from_byte(byte));
        ++out.steps;
        validate(k, &prev_back);
        record(k, byte);
    }
    out.input_length = k;

    if (!node->is_terminal()) {
        ctx.begin_step(k);
        IndexSet prev_back;
        if (opts.validate) prev_back = node->back();
        node = ctx.derive(node, Symbol::end_marker());
        ++out.steps;
        validate(k, &prev_back);
        record(k + 1, -1);
        if (!node->is_terminal())
            throw engine_error("end-of-input derivative did not resolve");
    } else {
        out.short_circuited = true;
    }

    if (node->is_empty()) {
        out.matched = true;
        out.consumed_through = node->at();
    }
    return out;
}

} // namespace

RecognitionOutcome recognize(const Grammar& g, std::span<const std::uint8_t> input,
                             const RecognizeOptions& opts) {
    std::size_t i = 0;
    return recognize_impl(
        g,
        [&](std::uint8_t& b) {
            if (i >= input.size()) return false;
            b = input[i++];
            return true;
        },
        opts);
}

RecognitionOutcome recognize(const Grammar& g, std::string_view input,
                             const RecognizeOptions& opts) {
    return recognize(
        g, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(input.data()),
                                         input.size()),
        opts);
}

RecognitionOutcome recognize(const Grammar& g, std::istream& input,
                             const RecognizeOptions& opts) {
    return recognize_impl(
        g,
        [&](std::uint8_t& b) {
            int c = input.get();
            if (c == std::char_traits<char>::eof()) {
                if (input.bad()) throw std::runtime_error("input read error");
                return false;
            }
            b = static_cast<std::uint8_t>(c);
            return true;
        },
        opts);
}

} // namespace sped
