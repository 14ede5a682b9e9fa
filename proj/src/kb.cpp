#include "clavir/kb.hpp"

#include <algorithm>
#include <sstream>

#include "clavir/lexer.hpp"

namespace clavir::kb {

std::string_view to_string(Relation rel) {
    switch (rel) {
    case Relation::HasModel: return "has_model";
    case Relation::ImplementedBy: return "implemented_by";
    case Relation::RealizedIn: return "realized_in";
    case Relation::DeployedAs: return "deployed_as";
    }
    return "?";
}

std::optional<Relation> parse_relation(std::string_view text) {
    for (Relation r : {Relation::HasModel, Relation::ImplementedBy, Relation::RealizedIn, Relation::DeployedAs}) {
        if (to_string(r) == text) return r;
    }
    return std::nullopt;
}

int source_level(Relation rel) {
    switch (rel) {
    case Relation::HasModel: return kObjectLevel;
    case Relation::ImplementedBy: return kModelLevel;
    case Relation::RealizedIn: return kMethodLevel;
    case Relation::DeployedAs: return kPackageLevel;
    }
    return 0;
}

namespace {

bool valid_level(int level) { return level >= kObjectLevel && level <= kServiceLevel; }

}  // namespace

KnowledgeBase& KnowledgeBase::add_concept(ConceptNode node) {
    if (node.id.empty()) throw Error(ErrorKind::InvalidArgument, "concept id must be non-empty", node.pos);
    if (!valid_level(node.level)) {
        throw Error(ErrorKind::InvalidLevel,
                    "concept '" + node.id + "' has level " + std::to_string(node.level) + ", expected 1..5",
                    node.pos);
    }
    insert_raw(std::move(node));
    return *this;
}

KnowledgeBase& KnowledgeBase::link(const std::string& from, Relation relation, const std::string& to) {
    const ConceptNode* src = find(from);
    if (!src) throw Error(ErrorKind::UnknownNode, "unknown concept '" + from + "'");
    const ConceptNode* dst = find(to);
    if (!dst) throw Error(ErrorKind::UnknownNode, "unknown concept '" + to + "'");
    int expected = source_level(relation);
    if (src->level != expected || dst->level != expected + 1) {
        throw Error(ErrorKind::LevelMismatch,
                    std::string(to_string(relation)) + " requires levels " + std::to_string(expected) + "->" +
                        std::to_string(expected + 1) + ", got " + from + "[" + std::to_string(src->level) +
                        "] -> " + to + "[" + std::to_string(dst->level) + "]");
    }
    links_.insert(ConceptLink{from, relation, to, {}});
    return *this;
}

void KnowledgeBase::insert_raw(ConceptNode node) {
    if (nodes_.contains(node.id)) {
        throw Error(ErrorKind::DuplicateId, "duplicate concept id '" + node.id + "'", node.pos);
    }
    std::string id = node.id;
    nodes_.emplace(std::move(id), std::move(node));
}

void KnowledgeBase::insert_raw(ConceptLink link) { links_.insert(std::move(link)); }

const ConceptNode* KnowledgeBase::find(std::string_view id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

bool KnowledgeBase::has_link(const std::string& from, Relation relation, const std::string& to) const {
    return links_.contains(ConceptLink{from, relation, to, {}});
}

std::vector<std::string> KnowledgeBase::targets(const std::string& from, Relation relation) const {
    std::vector<std::string> out;
    auto it = links_.lower_bound(ConceptLink{from, relation, std::string(), {}});
    for (; it != links_.end() && it->from == from && it->relation == relation; ++it) out.push_back(it->to);
    return out;
}

const ConceptNode& KnowledgeBase::require(const std::string& id, int level) const {
    const ConceptNode* node = find(id);
    if (!node) throw Error(ErrorKind::UnknownNode, "unknown concept '" + id + "'");
    if (node->level != level) {
        throw Error(ErrorKind::WrongLevel, "concept '" + id + "' is at level " + std::to_string(node->level) +
                                               ", expected " + std::to_string(level));
    }
    return *node;
}

std::vector<Chain> KnowledgeBase::resolve_chain(const std::string& object_id) const {
    require(object_id, kObjectLevel);
    auto at_level = [this](const std::string& id, int level) {
        const ConceptNode* n = find(id);
        return n && n->level == level;
    };
    std::vector<Chain> out;
    for (const auto& model : targets(object_id, Relation::HasModel)) {
        if (!at_level(model, kModelLevel)) continue;
        for (const auto& method : targets(model, Relation::ImplementedBy)) {
            if (!at_level(method, kMethodLevel)) continue;
            for (const auto& pkg : targets(method, Relation::RealizedIn)) {
                if (at_level(pkg, kPackageLevel)) out.push_back(Chain{model, method, pkg});
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> KnowledgeBase::packages_for_method(const std::string& method_id) const {
    require(method_id, kMethodLevel);
    std::vector<std::string> out;
    for (auto& id : targets(method_id, Relation::RealizedIn)) {
        const ConceptNode* n = find(id);
        if (n && n->level == kPackageLevel) out.push_back(std::move(id));
    }
    return out;
}

Diagnostics KnowledgeBase::validate() const {
    Diagnostics diags;
    for (const auto& [id, node] : nodes_) {
        if (id.empty()) diags.push_back(make_error("EmptyId", "concept with empty id", node.pos));
        if (!valid_level(node.level)) {
            diags.push_back(make_error("InvalidLevel",
                                       "concept '" + id + "' has level " + std::to_string(node.level), node.pos));
        }
    }
    for (const auto& l : links_) {
        std::string triple = l.from + " " + std::string(to_string(l.relation)) + " " + l.to;
        const ConceptNode* src = find(l.from);
        const ConceptNode* dst = find(l.to);
        if (!src) diags.push_back(make_error("UnknownNode", "link '" + triple + "': unknown concept '" + l.from + "'", l.pos));
        if (!dst) diags.push_back(make_error("UnknownNode", "link '" + triple + "': unknown concept '" + l.to + "'", l.pos));
        if (src && dst) {
            int expected = source_level(l.relation);
            if (src->level != expected || dst->level != expected + 1) {
                diags.push_back(make_error("LevelMismatch",
                                           "link '" + triple + "' requires levels " + std::to_string(expected) +
                                               "->" + std::to_string(expected + 1) + ", got " +
                                               std::to_string(src->level) + "->" + std::to_string(dst->level),
                                           l.pos));
            }
        }
    }
    return diags;
}

namespace {

using text::Tok;

std::string parse_id(text::TokenStream& ts) {
    if (ts.at(Tok::String)) return ts.next().text;
    return ts.expect_ident("concept id");
}

std::string print_id(const std::string& id) { return is_identifier(id) ? id : quote(id); }

}  // namespace

KnowledgeBase parse_kb(std::string_view source) {
    text::TokenStream ts(source);
    KnowledgeBase kb;
    while (!ts.at(Tok::End)) {
        SourcePos pos = ts.peek().pos;
        if (ts.accept_keyword("concept")) {
            ConceptNode node;
            node.pos = pos;
            node.id = parse_id(ts);
            if (node.id.empty()) ts.fail_at(pos, ErrorKind::ParseError, "concept id must be non-empty");
            ts.expect_keyword("level");
            text::Token lvl = ts.expect_signed_number("level number");
            if (!lvl.integral) ts.fail_at(lvl.pos, ErrorKind::ParseError, "level must be an integer");
            node.level = static_cast<int>(std::clamp<std::int64_t>(text::to_int(lvl), -1000, 1000));
            node.name = ts.expect_string("concept name");
            if (ts.accept(Tok::LBrace)) {
                while (!ts.accept(Tok::RBrace)) {
                    text::Token key = ts.expect(Tok::Ident, "attribute name or '}'");
                    ts.expect(Tok::Equals);
                    Scalar value = text::parse_literal(ts);
                    if (!node.attributes.emplace(key.text, std::move(value)).second) {
                        ts.fail_at(key.pos, ErrorKind::ParseError, "duplicate attribute '" + key.text + "'");
                    }
                }
            }
            kb.insert_raw(std::move(node));
        } else if (ts.accept_keyword("link")) {
            ConceptLink l;
            l.pos = pos;
            l.from = parse_id(ts);
            text::Token rel = ts.expect(Tok::Ident, "relation");
            auto parsed = parse_relation(rel.text);
            if (!parsed) {
                ts.fail_at(rel.pos, ErrorKind::ParseError,
                           "unknown relation '" + rel.text +
                               "', expected has_model, implemented_by, realized_in or deployed_as");
            }
            l.relation = *parsed;
            l.to = parse_id(ts);
            kb.insert_raw(std::move(l));
        } else {
            ts.fail("'concept' or 'link'");
        }
    }
    return kb;
}

std::string print_kb(const KnowledgeBase& kb) {
    std::ostringstream os;
    for (const auto& [id, node] : kb.nodes()) {
        os << "concept " << print_id(id) << " level " << node.level << ' ' << quote(node.name);
        if (!node.attributes.empty()) {
            os << " {";
            for (const auto& [key, value] : node.attributes) os << ' ' << key << " = " << format_scalar(value);
            os << " }";
        }
        os << '\n';
    }
    for (const auto& l : kb.links()) {
        os << "link " << print_id(l.from) << ' ' << to_string(l.relation) << ' ' << print_id(l.to) << '\n';
    }
    return os.str();
}

KnowledgeBase load_kb(const std::filesystem::path& path) { return parse_kb(read_file(path)); }

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) { write_file_atomic(path, print_kb(kb)); }

}  // namespace clavir::kb
