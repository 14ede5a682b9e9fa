#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "clavir/common.hpp"

namespace clavir::kb {

/// Concept levels: 1 simulated object, 2 model, 3 method, 4 package concept,
/// 5 service concept.
inline constexpr int kObjectLevel = 1;
inline constexpr int kModelLevel = 2;
inline constexpr int kMethodLevel = 3;
inline constexpr int kPackageLevel = 4;
inline constexpr int kServiceLevel = 5;

struct ConceptNode {
    std::string id;
    int level = 0;
    std::string name;
    std::map<std::string, Scalar> attributes;
    SourcePos pos;  // not part of equality

    bool operator==(const ConceptNode& o) const {
        return id == o.id && level == o.level && name == o.name && attributes == o.attributes;
    }
};

enum class Relation { HasModel, ImplementedBy, RealizedIn, DeployedAs };

std::string_view to_string(Relation rel);
std::optional<Relation> parse_relation(std::string_view text);
/// Level of the link source; the target sits one level below.
int source_level(Relation rel);

struct ConceptLink {
    std::string from;
    Relation relation = Relation::HasModel;
    std::string to;
    SourcePos pos;  // not part of equality or ordering

    auto key() const { return std::tie(from, relation, to); }
    bool operator==(const ConceptLink& o) const { return key() == o.key(); }
    bool operator<(const ConceptLink& o) const { return key() < o.key(); }
};

struct Chain {
    std::string model;
    std::string method;
    std::string package;

    auto operator<=>(const Chain&) const = default;
};

/// Five-level concept hierarchy. The checked mutators enforce every invariant;
/// `load_kb` goes through the raw inserters so that a hand-edited file can be
/// loaded and then reported on by `validate()`.
class KnowledgeBase {
public:
    /// Throws DuplicateId or InvalidLevel.
    KnowledgeBase& add_concept(ConceptNode node);
    /// Throws UnknownNode or LevelMismatch. Re-adding an identical triple is a no-op.
    KnowledgeBase& link(const std::string& from, Relation relation, const std::string& to);

    /// Unchecked insertion used by the file loader. Throws DuplicateId only.
    void insert_raw(ConceptNode node);
    void insert_raw(ConceptLink link);

    const ConceptNode* find(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    bool has_link(const std::string& from, Relation relation, const std::string& to) const;

    const std::map<std::string, ConceptNode, std::less<>>& nodes() const { return nodes_; }
    const std::set<ConceptLink>& links() const { return links_; }

    /// Sorted targets of `from --relation--> *`.
    std::vector<std::string> targets(const std::string& from, Relation relation) const;

    /// Every object -> model -> method -> package-concept path, sorted.
    std::vector<Chain> resolve_chain(const std::string& object_id) const;
    std::vector<std::string> packages_for_method(const std::string& method_id) const;

    Diagnostics validate() const;

    bool operator==(const KnowledgeBase& o) const { return nodes_ == o.nodes_ && links_ == o.links_; }

private:
    const ConceptNode& require(const std::string& id, int level) const;

    std::map<std::string, ConceptNode, std::less<>> nodes_;
    std::set<ConceptLink> links_;
};

KnowledgeBase parse_kb(std::string_view text);
std::string print_kb(const KnowledgeBase& kb);

KnowledgeBase load_kb(const std::filesystem::path& path);
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);

}  // namespace clavir::kb
