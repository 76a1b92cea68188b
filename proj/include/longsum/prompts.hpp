#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "longsum/errors.hpp"
#include "longsum/text.hpp"

namespace longsum::prompts {

enum class TemplateId {
    inc_initial,
    inc_update,
    inc_compress,
    hier_leaf,
    hier_merge,
    hier_merge_context,
    artifact_removal,
    booook_eval,
    simple_leaf,
    simple_merge,
    simple_merge_context,
};

inline constexpr std::array<TemplateId, 11> kAllTemplateIds = {
    TemplateId::inc_initial,    TemplateId::inc_update,   TemplateId::inc_compress,
    TemplateId::hier_leaf,      TemplateId::hier_merge,   TemplateId::hier_merge_context,
    TemplateId::artifact_removal, TemplateId::booook_eval, TemplateId::simple_leaf,
    TemplateId::simple_merge,   TemplateId::simple_merge_context,
};

inline constexpr const char* to_string(TemplateId id) {
    switch (id) {
        case TemplateId::inc_initial: return "inc_initial";
        case TemplateId::inc_update: return "inc_update";
        case TemplateId::inc_compress: return "inc_compress";
        case TemplateId::hier_leaf: return "hier_leaf";
        case TemplateId::hier_merge: return "hier_merge";
        case TemplateId::hier_merge_context: return "hier_merge_context";
        case TemplateId::artifact_removal: return "artifact_removal";
        case TemplateId::booook_eval: return "booook_eval";
        case TemplateId::simple_leaf: return "simple_leaf";
        case TemplateId::simple_merge: return "simple_merge";
        case TemplateId::simple_merge_context: return "simple_merge_context";
    }
    return "unknown";
}

inline TemplateId template_id_from_string(std::string_view name) {
    for (TemplateId id : kAllTemplateIds)
        if (name == to_string(id)) return id;
    throw ConfigError("unknown template id: " + std::string(name));
}

/// A prompt body with ordered positional `{}` placeholders.
struct PromptTemplate {
    TemplateId id{};
    std::string body;
    std::size_t placeholder_count = 0;

    std::uint64_t hash() const { return text::fnv1a64(body); }
};

inline std::size_t count_placeholders(std::string_view body) {
    std::size_t count = 0;
    for (std::size_t pos = body.find("{}"); pos != std::string_view::npos;
         pos = body.find("{}", pos + 2))
        ++count;
    return count;
}

/// Registry of prompt templates loaded from one UTF-8 text asset per id
/// (`<id>.txt`). Immutable after load; thread-safe.
class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir) {
        PromptLibrary lib;
        lib.dir_ = dir;
        for (TemplateId id : kAllTemplateIds) {
            const auto path = dir / (std::string(to_string(id)) + ".txt");
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ConfigError("cannot open prompt template: " + path.string());
            std::ostringstream buffer;
            buffer << in.rdbuf();
            std::string body = buffer.str();
            if (!body.empty() && body.back() == '\n') body.pop_back();  // file-final newline
            PromptTemplate tmpl{id, std::move(body), 0};
            tmpl.placeholder_count = count_placeholders(tmpl.body);
            lib.templates_.emplace(id, std::move(tmpl));
        }
        return lib;
    }

    const PromptTemplate& get(TemplateId id) const {
        auto it = templates_.find(id);
        if (it == templates_.end())
            throw ConfigError(std::string("unknown template: ") + to_string(id));
        return it->second;
    }

    /// Byte-exact substitution of `values` into the template's `{}` slots.
    std::string fill(TemplateId id, std::span<const std::string> values) const {
        const PromptTemplate& tmpl = get(id);
        if (values.size() != tmpl.placeholder_count)
            throw ConfigError(std::string("arity mismatch for template ") + to_string(id) +
                              ": expected " + std::to_string(tmpl.placeholder_count) + " values, got " +
                              std::to_string(values.size()));
        std::string out;
        out.reserve(tmpl.body.size() + 64);
        std::size_t pos = 0;
        for (const auto& value : values) {
            const std::size_t slot = tmpl.body.find("{}", pos);
            out.append(tmpl.body, pos, slot - pos);
            out.append(value);
            pos = slot + 2;
        }
        out.append(tmpl.body, pos, std::string::npos);
        return out;
    }

    std::string fill(TemplateId id, std::initializer_list<std::string> values) const {
        return fill(id, std::span<const std::string>(values.begin(), values.size()));
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::map<TemplateId, PromptTemplate> templates_;
};

/// Prompt word limits are phrased in words while budgets are tokens.
inline std::size_t words_for_tokens(std::size_t tokens, double words_per_token = 0.75) {
    if (words_per_token <= 0.0) throw ConfigError("words_per_token must be positive");
    const auto words =
        static_cast<std::size_t>(std::llround(static_cast<double>(tokens) * words_per_token));
    return words > 0 ? words : 1;
}

/// Default template directory: LONGSUM_TEMPLATE_DIR env var, else the
/// compile-time asset path.
inline std::filesystem::path default_template_dir() {
    if (const char* env = std::getenv("LONGSUM_TEMPLATE_DIR"); env != nullptr && *env != '\0')
        return env;
#ifdef LONGSUM_DEFAULT_TEMPLATE_DIR
    return LONGSUM_DEFAULT_TEMPLATE_DIR;
#else
    return std::filesystem::path("assets") / "prompts";
#endif
}

}  // namespace longsum::prompts
