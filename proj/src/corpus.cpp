#include "mathforge/corpus.hpp"

#include "mathforge/error.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace mathforge {

namespace {

struct SourceInfo {
    Source source;
    std::string_view name;
    std::string_view tag;
};

constexpr std::array<SourceInfo, 7> kSourceInfo = {{
    {Source::AquaRat, "AQUA_RAT", "aqua"},
    {Source::Gsm8k, "GSM8K", "gsm8k"},
    {Source::Math, "MATH", "math"},
    {Source::NumGlue, "NUMGLUE", "numglue"},
    {Source::MathQa, "MATHQA", "mathqa"},
    {Source::TheoremQa, "THEOREMQA", "theoremqa"},
    {Source::DeepMindMath, "DEEPMIND_MATH", "deepmind"},
}};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n\f\v");
    return std::string(s.substr(b, e - b + 1));
}

// "1,234,567" -> "1234567". A comma counts as a separator only between a
// digit and a group of exactly three digits.
std::string strip_thousands(std::string_view s) {
    auto digit = [&](std::size_t i) { return i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); };
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && digit(i - 1) && digit(i + 1) && digit(i + 2) && digit(i + 3) &&
            !digit(i + 4)) {
            continue;
        }
        out.push_back(s[i]);
    }
    return out;
}

std::string strip_currency(std::string_view s) {
    static const std::array<std::string_view, 5> kSymbols = {"\\$", "$", "\xE2\x82\xAC", "\xC2\xA3",
                                                            "\xC2\xA5"};
    std::string out(s);
    for (auto sym : kSymbols) {
        std::size_t pos = 0;
        while ((pos = out.find(sym, pos)) != std::string::npos) out.erase(pos, sym.size());
    }
    return out;
}

std::optional<char> as_choice_label(std::string_view text) {
    std::string t = trim(text);
    // "B", "b", "(B)", "B)"
    if (t.size() >= 2 && t.front() == '(' ) t.erase(t.begin());
    if (!t.empty() && t.back() == ')') t.pop_back();
    t = trim(t);
    if (t.size() != 1) return std::nullopt;
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    if (c < 'A' || c > 'J') return std::nullopt;
    return c;
}

// "A)21", "a ) 38", "(C) 7" -> ('A', "21")
std::optional<std::pair<char, std::string>> split_option(std::string_view option) {
    static const std::regex kLabel(R"(^\s*\(?\s*([A-Ja-j])\s*\)\s*)");
    std::string s(option);
    std::smatch m;
    if (!std::regex_search(s, m, kLabel)) return std::nullopt;
    char label = static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
    return std::make_pair(label, trim(s.substr(static_cast<std::size_t>(m.length(0)))));
}

std::optional<std::string> option_text(const std::vector<std::string>& choices, char label) {
    for (const auto& c : choices) {
        if (auto parts = split_option(c); parts && parts->first == label) return parts->second;
    }
    return std::nullopt;
}

// Last \boxed{...} (or \fbox{...}) payload, brace-matched.
std::optional<std::string> last_boxed(std::string_view solution) {
    std::size_t pos = std::string_view::npos;
    std::size_t skip = 0;
    for (std::string_view marker : {"\\boxed", "\\fbox"}) {
        auto p = solution.rfind(marker);
        if (p != std::string_view::npos && (pos == std::string_view::npos || p > pos)) {
            pos = p;
            skip = marker.size();
        }
    }
    if (pos == std::string_view::npos) return std::nullopt;
    std::size_t i = pos + skip;
    while (i < solution.size() && solution[i] == ' ') ++i;
    if (i < solution.size() && solution[i] == '{') {
        int depth = 0;
        for (std::size_t j = i; j < solution.size(); ++j) {
            if (solution[j] == '{') ++depth;
            if (solution[j] == '}' && --depth == 0) return std::string(solution.substr(i + 1, j - i - 1));
        }
        return std::nullopt;
    }
    std::size_t j = i;
    while (j < solution.size() && solution[j] != '$' && !std::isspace(static_cast<unsigned char>(solution[j]))) ++j;
    if (j == i) return std::nullopt;
    return std::string(solution.substr(i, j - i));
}

std::string json_scalar_text(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "True" : "False";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return shortest_decimal(v.get<double>());
    return v.dump();
}

const Json* field(const Json& rec, std::initializer_list<std::string_view> names) {
    if (!rec.is_object()) return nullptr;
    for (auto n : names) {
        auto it = rec.find(std::string(n));
        if (it != rec.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

struct Parsed {
    std::optional<SourceProblem> problem;
    std::string reason;
};

Parsed reject(std::string reason) {
    return {std::nullopt, std::move(reason)};
}

// Question key per format; a file whose records never carry it is declared
// under the wrong format.
const Json* question_field(const Json& rec, Source format) {
    switch (format) {
    case Source::MathQa: return field(rec, {"Problem", "problem"});
    case Source::Math: return field(rec, {"problem"});
    case Source::TheoremQa: return field(rec, {"Question", "question"});
    default: return field(rec, {"question"});
    }
}

Parsed parse_record(const Json& rec, Source format) {
    if (!rec.is_object()) return reject("record is not an object");
    const Json* q = question_field(rec, format);
    if (!q || !q->is_string()) return reject("missing question field");
    SourceProblem p;
    p.source = format;
    p.question = trim(q->get<std::string>());
    if (normalize_whitespace(p.question).empty()) return reject("empty question");

    std::string raw_answer;
    switch (format) {
    case Source::Gsm8k: {
        const Json* a = field(rec, {"answer"});
        if (!a || !a->is_string()) return reject("missing answer field");
        std::string text = a->get<std::string>();
        auto mark = text.rfind("####");
        if (mark == std::string::npos) return reject("answer has no '####' final line");
        raw_answer = trim(text.substr(mark + 4));
        break;
    }
    case Source::AquaRat: {
        const Json* opts = field(rec, {"options"});
        const Json* correct = field(rec, {"correct"});
        if (!opts || !opts->is_array() || opts->empty()) return reject("missing options");
        if (!correct || !correct->is_string()) return reject("missing correct label");
        std::vector<std::string> choices;
        for (const auto& o : *opts) {
            if (!o.is_string()) return reject("non-string option");
            choices.push_back(o.get<std::string>());
        }
        p.choices = std::move(choices);
        raw_answer = correct->get<std::string>();
        if (const Json* r = field(rec, {"rationale"}); r && r->is_string()) {
            p.meta["rationale"] = r->get<std::string>();
        }
        break;
    }
    case Source::MathQa: {
        const Json* opts = field(rec, {"options"});
        const Json* correct = field(rec, {"correct"});
        if (!opts || !correct || !correct->is_string()) return reject("missing options or correct label");
        std::vector<std::string> choices;
        if (opts->is_array()) {
            for (const auto& o : *opts) choices.push_back(json_scalar_text(o));
        } else if (opts->is_string()) {
            static const std::regex kOpt(R"(([a-j])\s*\)\s*(.*?)\s*(?=,\s*[a-j]\s*\)|$))");
            std::string s = opts->get<std::string>();
            for (auto it = std::sregex_iterator(s.begin(), s.end(), kOpt); it != std::sregex_iterator(); ++it) {
                choices.push_back(trim((*it)[0].str()));
            }
        }
        if (choices.empty()) return reject("unparseable options");
        p.choices = std::move(choices);
        raw_answer = correct->get<std::string>();
        if (const Json* c = field(rec, {"category"}); c && c->is_string()) p.meta["category"] = c->get<std::string>();
        break;
    }
    case Source::Math: {
        if (const Json* a = field(rec, {"answer"}); a) {
            raw_answer = json_scalar_text(*a);
        } else {
            const Json* sol = field(rec, {"solution"});
            if (!sol || !sol->is_string()) return reject("missing solution");
            auto boxed = last_boxed(sol->get<std::string>());
            if (!boxed) return reject("solution has no \\boxed answer");
            raw_answer = *boxed;
        }
        for (auto key : {"level", "type"}) {
            if (const Json* m = field(rec, {key}); m && m->is_string()) p.meta[key] = m->get<std::string>();
        }
        break;
    }
    case Source::NumGlue: {
        const Json* a = field(rec, {"answer"});
        if (!a) return reject("missing answer field");
        if (a->is_object()) {
            const Json* n = field(*a, {"number"});
            if (!n || json_scalar_text(*n).empty()) return reject("answer object has no number");
            raw_answer = json_scalar_text(*n);
        } else {
            raw_answer = json_scalar_text(*a);
        }
        if (const Json* t = field(rec, {"type"}); t) p.meta["type"] = json_scalar_text(*t);
        break;
    }
    case Source::TheoremQa: {
        const Json* a = field(rec, {"Answer", "answer"});
        if (!a) return reject("missing answer field");
        raw_answer = json_scalar_text(*a);
        if (const Json* t = field(rec, {"Answer_type", "answer_type"}); t) p.meta["answer_type"] = json_scalar_text(*t);
        break;
    }
    case Source::DeepMindMath: {
        const Json* a = field(rec, {"answer"});
        if (!a) return reject("missing answer field");
        raw_answer = json_scalar_text(*a);
        if (const Json* m = field(rec, {"module"}); m && m->is_string()) p.meta["module"] = m->get<std::string>();
        break;
    }
    }
    if (trim(raw_answer).empty()) return reject("empty answer");
    p.answer = normalize_answer(raw_answer, format);
    if (is_multiple_choice(format)) {
        if (p.answer.kind != AnswerKind::Choice) return reject("correct label is not a choice letter");
        p.answer.choice_text = option_text(*p.choices, *p.answer.choice_label);
        if (!p.answer.choice_text) return reject("correct label not among options");
    }
    return {std::move(p), {}};
}

// DeepMind-Mathematics plain text: alternating question / answer lines.
std::vector<Json> deepmind_pairs(const std::string& text, std::size_t& dangling) {
    std::vector<Json> out;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        lines.push_back(line);
    }
    for (std::size_t i = 0; i + 1 < lines.size(); i += 2) {
        Json rec;
        rec["question"] = lines[i];
        rec["answer"] = lines[i + 1];
        out.push_back(std::move(rec));
    }
    dangling = lines.size() % 2;
    return out;
}

} // namespace

std::string_view source_name(Source source) {
    for (const auto& i : kSourceInfo) {
        if (i.source == source) return i.name;
    }
    return "UNKNOWN";
}

std::string_view source_tag(Source source) {
    for (const auto& i : kSourceInfo) {
        if (i.source == source) return i.tag;
    }
    return "unknown";
}

std::optional<Source> parse_source(std::string_view text) {
    std::string t = lower(text);
    for (const auto& i : kSourceInfo) {
        if (t == lower(i.name) || t == i.tag) return i.source;
    }
    if (t == "aqua_rat" || t == "aqua-rat") return Source::AquaRat;
    if (t == "deepmind-mathematics" || t == "deepmind_mathematics") return Source::DeepMindMath;
    return std::nullopt;
}

bool is_multiple_choice(Source source) {
    return source == Source::AquaRat || source == Source::MathQa;
}

std::string_view answer_kind_name(AnswerKind kind) {
    switch (kind) {
    case AnswerKind::Numeric: return "NUMERIC";
    case AnswerKind::Choice: return "CHOICE";
    case AnswerKind::Text: return "TEXT";
    }
    return "TEXT";
}

std::optional<AnswerKind> parse_answer_kind(std::string_view text) {
    if (text == "NUMERIC") return AnswerKind::Numeric;
    if (text == "CHOICE") return AnswerKind::Choice;
    if (text == "TEXT") return AnswerKind::Text;
    return std::nullopt;
}

std::string GroundTruthAnswer::render() const {
    switch (kind) {
    case AnswerKind::Numeric: return numeric_value ? numeric_value->to_string() : raw;
    case AnswerKind::Choice: return choice_label ? std::string(1, *choice_label) : raw;
    case AnswerKind::Text: return text_value ? *text_value : raw;
    }
    return raw;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

GroundTruthAnswer normalize_answer(std::string_view raw, Source source) {
    GroundTruthAnswer a;
    a.raw = std::string(raw);
    std::string text = normalize_whitespace(raw);
    if (is_multiple_choice(source)) {
        if (auto label = as_choice_label(text)) {
            a.kind = AnswerKind::Choice;
            a.choice_label = label;
            return a;
        }
    }
    std::string numeric = strip_thousands(strip_currency(text));
    numeric.erase(std::remove_if(numeric.begin(), numeric.end(),
                                 [](unsigned char c) { return std::isspace(c); }),
                  numeric.end());
    if (auto n = Number::parse(numeric)) {
        a.kind = AnswerKind::Numeric;
        a.numeric_value = *n;
        return a;
    }
    a.kind = AnswerKind::Text;
    a.text_value = text;
    return a;
}

LoadResult load_dataset(const std::filesystem::path& path, Source format, const LoadOptions& options) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error&) {
        throw Error(ErrorCode::UnreadableFile, path.string());
    }
    if (trim(text).empty()) throw Error(ErrorCode::EmptyDataset, path.string());

    std::vector<Json> records;
    std::size_t dangling = 0;
    char first = trim(text).front();
    if (first == '[') {
        Json doc = Json::parse(text, nullptr, false);
        if (doc.is_discarded() || !doc.is_array()) {
            throw Error(ErrorCode::SchemaMismatch, path.string() + ": not a JSON array");
        }
        for (auto& r : doc) records.push_back(std::move(r));
    } else if (first == '{') {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            Json r = Json::parse(line, nullptr, false);
            // Keep unparseable lines as records so they are counted and rejected.
            records.push_back(r.is_discarded() ? Json(line) : std::move(r));
        }
    } else if (format == Source::DeepMindMath) {
        records = deepmind_pairs(text, dangling);
    } else {
        throw Error(ErrorCode::SchemaMismatch,
                    path.string() + ": expected JSON for format " + std::string(source_name(format)));
    }
    if (records.empty() && dangling == 0) throw Error(ErrorCode::EmptyDataset, path.string());

    bool any_question_key = std::any_of(records.begin(), records.end(), [&](const Json& r) {
        return question_field(r, format) != nullptr;
    });
    if (!records.empty() && !any_question_key) {
        throw Error(ErrorCode::SchemaMismatch,
                    path.string() + ": no record carries the " + std::string(source_name(format)) +
                        " question field");
    }

    LoadResult result;
    result.input_records = records.size() + dangling;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto parsed = parse_record(records[i], format);
        std::size_t index = options.first_index + i;
        if (parsed.problem) {
            parsed.problem->id = std::string(source_tag(format)) + "-" + std::to_string(index);
            result.problems.push_back(std::move(*parsed.problem));
        } else {
            result.rejects.push_back({path, index, parsed.reason});
        }
    }
    if (dangling) {
        result.rejects.push_back({path, options.first_index + records.size(), "question line without answer"});
    }
    if (options.rejects_log) {
        for (const auto& r : result.rejects) {
            Json j;
            j["source"] = source_name(format);
            j["file"] = r.file.string();
            j["index"] = r.index;
            j["reason"] = r.reason;
            options.rejects_log->append(j);
        }
    }
    return result;
}

std::size_t CorpusCounts::count(Source source) const {
    return per_source[static_cast<std::size_t>(source)];
}

CorpusCounts corpus_stats(const std::vector<SourceProblem>& problems) {
    CorpusCounts c;
    for (const auto& p : problems) ++c.per_source[static_cast<std::size_t>(p.source)];
    c.total = problems.size();
    return c;
}

GroundTruthAnswer answer_from_parts(const std::string& kind_name, const std::string& raw, const std::string& value) {
    auto kind = parse_answer_kind(kind_name);
    if (!kind) throw Error(ErrorCode::SchemaMismatch, "unknown answer kind " + kind_name);
    GroundTruthAnswer a;
    a.kind = *kind;
    a.raw = raw;
    switch (*kind) {
    case AnswerKind::Numeric: {
        auto n = Number::parse(value);
        if (!n) throw Error(ErrorCode::SchemaMismatch, "bad numeric answer value " + value);
        a.numeric_value = *n;
        break;
    }
    case AnswerKind::Choice:
        if (value.size() != 1) throw Error(ErrorCode::SchemaMismatch, "bad choice answer value " + value);
        a.choice_label = value[0];
        break;
    case AnswerKind::Text: a.text_value = value; break;
    }
    return a;
}

Json answer_to_json(const GroundTruthAnswer& answer) {
    Json j;
    j["kind"] = answer_kind_name(answer.kind);
    j["raw"] = answer.raw;
    j["value"] = answer.render();
    if (answer.choice_text) j["choice_text"] = *answer.choice_text;
    return j;
}

GroundTruthAnswer answer_from_json(const Json& j) {
    try {
        auto a = answer_from_parts(j.at("kind").get<std::string>(), j.at("raw").get<std::string>(),
                                   j.at("value").get<std::string>());
        if (j.contains("choice_text")) a.choice_text = j["choice_text"].get<std::string>();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("answer: ") + e.what());
    }
}

Json to_record(const SourceProblem& p) {
    Json j;
    j["id"] = p.id;
    j["source"] = source_name(p.source);
    j["question"] = p.question;
    j["answer_kind"] = answer_kind_name(p.answer.kind);
    j["answer_raw"] = p.answer.raw;
    j["answer_value"] = p.answer.render();
    j["choices"] = p.choices ? Json(*p.choices) : Json(nullptr);
    j["meta"] = Json::object();
    for (const auto& [k, v] : p.meta) j["meta"][k] = v;
    return j;
}

SourceProblem from_record(const Json& j) {
    try {
        SourceProblem p;
        p.id = j.at("id").get<std::string>();
        auto source = parse_source(j.at("source").get<std::string>());
        if (!source) throw Error(ErrorCode::SchemaMismatch, "unknown source " + j.at("source").dump());
        p.source = *source;
        p.question = j.at("question").get<std::string>();
        p.answer = answer_from_parts(j.at("answer_kind").get<std::string>(), j.at("answer_raw").get<std::string>(),
                                     j.at("answer_value").get<std::string>());
        if (j.contains("choices") && !j["choices"].is_null()) {
            p.choices = j["choices"].get<std::vector<std::string>>();
            if (p.answer.choice_label) p.answer.choice_text = option_text(*p.choices, *p.answer.choice_label);
        }
        if (j.contains("meta")) {
            for (const auto& [k, v] : j["meta"].items()) p.meta[k] = v.get<std::string>();
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("corpus record: ") + e.what());
    }
}

std::vector<SourceProblem> read_corpus(const std::filesystem::path& path) {
    std::vector<SourceProblem> out;
    for (const auto& j : read_jsonl(path)) out.push_back(from_record(j));
    return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<SourceProblem>& problems) {
    std::vector<Json> records;
    records.reserve(problems.size());
    for (const auto& p : problems) records.push_back(to_record(p));
    write_jsonl(path, records);
}

} // namespace mathforge
