#include "sdm/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <map>
#include <sstream>

#include "sdm/fsio.hpp"

namespace sdm {

namespace {

const std::vector<std::string> kTableFiles = {
    "run.tbl",       "access_pattern.tbl", "execution.tbl",
    "import.tbl",    "index.tbl",          "index_history.tbl",
};

std::string now_utc() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

void check_value(const std::string& s, const char* what) {
    if (s.find('\t') != std::string::npos || s.find('\n') != std::string::npos)
        throw ValidationError(std::string(what) + " must not contain tabs or newlines");
}

// One record line: name=value pairs separated by tabs.
using Fields = std::vector<std::pair<std::string, std::string>>;

std::string format_fields(const Fields& f) {
    std::string line;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) line += '\t';
        line += f[i].first;
        line += '=';
        line += f[i].second;
    }
    line += '\n';
    return line;
}

class RowReader {
public:
    RowReader(const std::string& line, const std::string& file) : file_(file) {
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t tab = line.find('\t', pos);
            std::string field =
                line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos);
            std::size_t eq = field.find('=');
            if (eq == std::string::npos || eq == 0) corrupt("malformed field '" + field + "'");
            kv_.emplace(field.substr(0, eq), field.substr(eq + 1));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
    }

    const std::string& str(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) corrupt("missing field '" + key + "'");
        return it->second;
    }

    std::int64_t integer(const std::string& key) const { return parse_int(str(key)); }

    std::uint64_t uinteger(const std::string& key) const {
        std::int64_t v = parse_int(str(key));
        if (v < 0) corrupt("field '" + key + "' must be non-negative");
        return static_cast<std::uint64_t>(v);
    }

    std::vector<std::string> list(const std::string& key) const {
        return split_list(str(key));
    }

    std::vector<std::int64_t> int_list(const std::string& key) const {
        std::vector<std::int64_t> out;
        for (const auto& item : split_list(str(key))) out.push_back(parse_int(item));
        return out;
    }

    [[noreturn]] void corrupt(const std::string& why) const {
        throw CatalogCorruptError("catalog table '" + file_ + "' is corrupt: " + why);
    }

private:
    std::int64_t parse_int(const std::string& s) const {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            corrupt("'" + s + "' is not an integer");
        return v;
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        if (s.empty()) return out;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = s.find(',', pos);
            out.push_back(s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                   : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return out;
    }

    std::string file_;
    std::map<std::string, std::string> kv_;
};

template <typename T>
std::string join_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_names(const std::vector<DatasetSpec>& specs) {
    std::string out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (i) out += ',';
        out += specs[i].name;
    }
    return out;
}

std::string join_types(const std::vector<DatasetSpec>& specs) {
    std::string out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (i) out += ',';
        out += to_string(specs[i].type);
    }
    return out;
}

} // namespace

Bytes DataGroupDescriptor::encode() const {
    ByteWriter w;
    w.i64(run_id);
    w.i32(group_id);
    w.str(name);
    w.u64(datasets.size());
    for (const auto& d : datasets) {
        w.str(d.name);
        w.u32(static_cast<std::uint32_t>(d.type));
    }
    w.i64(global_count);
    w.u64(counts.size());
    for (auto c : counts) w.i64(c);
    w.u32(static_cast<std::uint32_t>(kind));
    w.i32(static_cast<int>(level));
    w.str(source_file);
    return w.take();
}

DataGroupDescriptor DataGroupDescriptor::decode(ByteSpan b) {
    ByteReader r(b);
    DataGroupDescriptor d;
    d.run_id = r.i64();
    d.group_id = r.i32();
    d.name = r.str();
    std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        DatasetSpec s;
        s.name = r.str();
        s.type = static_cast<DataType>(r.u32());
        d.datasets.push_back(std::move(s));
    }
    d.global_count = r.i64();
    std::uint64_t m = r.u64();
    for (std::uint64_t i = 0; i < m; ++i) d.counts.push_back(r.i64());
    d.kind = static_cast<GroupKind>(r.u32());
    d.level = static_cast<OrgLevel>(r.i32());
    d.source_file = r.str();
    return d;
}

Bytes IndexHistoryRecord::encode() const {
    ByteWriter w;
    w.i64(total_nodes);
    w.i64(total_edges);
    w.i32(nprocs);
    w.str(history_file);
    w.u64(per_rank_edge_counts.size());
    for (auto v : per_rank_edge_counts) w.i64(v);
    for (auto v : per_rank_node_counts) w.i64(v);
    for (auto v : per_rank_byte_offsets) w.u64(v);
    return w.take();
}

IndexHistoryRecord IndexHistoryRecord::decode(ByteSpan b) {
    ByteReader r(b);
    IndexHistoryRecord rec;
    rec.total_nodes = r.i64();
    rec.total_edges = r.i64();
    rec.nprocs = r.i32();
    rec.history_file = r.str();
    std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) rec.per_rank_edge_counts.push_back(r.i64());
    for (std::uint64_t i = 0; i < n; ++i) rec.per_rank_node_counts.push_back(r.i64());
    for (std::uint64_t i = 0; i < n; ++i) rec.per_rank_byte_offsets.push_back(r.u64());
    return rec;
}

struct Catalog::Impl {
    std::filesystem::path root;
    bool readonly = false;
    bool finalized = false;
    mutable std::mutex m;

    std::vector<RunRow> run_rows;
    std::vector<DataGroupDescriptor> result_groups;
    std::vector<DataGroupDescriptor> import_groups;
    std::vector<ExecutionRecord> exec_rows;
    std::vector<std::pair<std::int64_t, IndexHistoryRecord>> index_rows;

    std::int64_t current_run = 0;
    std::shared_future<void> pending;

    std::filesystem::path table_path(const char* name) const { return root / name; }

    void require_live() const {
        if (finalized) throw LifecycleError("catalog handle used after finalize");
    }
    void require_writable() const {
        require_live();
        if (readonly) throw LifecycleError("catalog opened read-only");
    }

    // ---- persistence -------------------------------------------------------

    void load() {
        load_runs();
        load_groups("access_pattern.tbl", GroupKind::Result, result_groups);
        load_groups("import.tbl", GroupKind::Import, import_groups);
        load_exec();
        load_index();
    }

    void load_runs() {
        for_each_row("run.tbl", [&](const RowReader& row) {
            RunRow r;
            r.run_id = row.integer("run_id");
            r.app_name = row.str("app");
            r.nprocs = static_cast<int>(row.integer("nprocs"));
            r.timestamp = row.str("timestamp");
            r.org_level = static_cast<int>(row.integer("org_level"));
            run_rows.push_back(std::move(r));
        });
    }

    void load_groups(const char* file, GroupKind kind, std::vector<DataGroupDescriptor>& out) {
        for_each_row(file, [&](const RowReader& row) {
            DataGroupDescriptor g;
            g.kind = kind;
            g.run_id = row.integer("run_id");
            g.group_id = static_cast<int>(row.integer("group_id"));
            g.name = row.str("name");
            auto names = row.list("datasets");
            auto types = row.list("types");
            if (names.size() != types.size())
                row.corrupt("datasets and types lists differ in length");
            for (std::size_t i = 0; i < names.size(); ++i)
                g.datasets.push_back({names[i], data_type_from_string(types[i])});
            if (kind == GroupKind::Result) {
                g.global_count = row.integer("global_count");
                g.level = org_level_from_int(static_cast<int>(row.integer("level")));
            } else {
                g.counts = row.int_list("counts");
                if (g.counts.size() != g.datasets.size())
                    row.corrupt("counts list length differs from datasets");
                g.source_file = row.str("source");
            }
            out.push_back(std::move(g));
        });
    }

    void load_exec() {
        for_each_row("execution.tbl", [&](const RowReader& row) {
            ExecutionRecord e;
            e.run_id = row.integer("run_id");
            e.dataset = row.str("dataset");
            e.timestep = static_cast<int>(row.integer("timestep"));
            e.file_id = row.str("file");
            e.byte_offset = row.uinteger("offset");
            e.byte_length = row.uinteger("length");
            exec_rows.push_back(std::move(e));
        });
    }

    void load_index() {
        struct KeyPart {
            IndexHistoryRecord rec;
        };
        std::map<std::int64_t, IndexHistoryRecord> by_id;
        std::vector<std::int64_t> order;
        for_each_row("index.tbl", [&](const RowReader& row) {
            IndexHistoryRecord rec;
            std::int64_t id = row.integer("index_id");
            rec.total_nodes = row.integer("total_nodes");
            rec.total_edges = row.integer("total_edges");
            rec.nprocs = static_cast<int>(row.integer("nprocs"));
            rec.history_file = row.str("history");
            if (!by_id.emplace(id, std::move(rec)).second)
                row.corrupt("duplicate index_id " + std::to_string(id));
            order.push_back(id);
        });
        std::size_t matched = 0;
        for_each_row("index_history.tbl", [&](const RowReader& row) {
            std::int64_t id = row.integer("index_id");
            auto it = by_id.find(id);
            if (it == by_id.end())
                row.corrupt("index_id " + std::to_string(id) + " has no index.tbl row");
            auto& rec = it->second;
            rec.per_rank_edge_counts = row.int_list("edge_counts");
            rec.per_rank_node_counts = row.int_list("node_counts");
            auto offs = row.int_list("byte_offsets");
            for (auto v : offs) {
                if (v < 0) row.corrupt("negative byte offset");
                rec.per_rank_byte_offsets.push_back(static_cast<std::uint64_t>(v));
            }
            const auto n = static_cast<std::size_t>(rec.nprocs);
            if (rec.per_rank_edge_counts.size() != n ||
                rec.per_rank_node_counts.size() != n ||
                rec.per_rank_byte_offsets.size() != n)
                row.corrupt("per-rank list length differs from nprocs");
            ++matched;
        });
        if (matched != by_id.size())
            throw CatalogCorruptError(
                "catalog table 'index_history.tbl' is corrupt: missing rows for " +
                std::to_string(by_id.size() - matched) + " index entr(ies)");
        for (auto id : order) index_rows.emplace_back(id, std::move(by_id.at(id)));
    }

    template <typename F>
    void for_each_row(const char* file, F&& f) {
        auto path = table_path(file);
        std::string text = read_text_file(path);
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string::npos)
                throw CatalogCorruptError("catalog table '" + std::string(file) +
                                          "' is corrupt: truncated final record");
            std::string line = text.substr(pos, nl - pos);
            pos = nl + 1;
            if (line.empty()) continue;
            RowReader row(line, file);
            f(row);
        }
    }

    // ---- table writers -----------------------------------------------------

    void save_runs() const {
        std::string text;
        for (const auto& r : run_rows)
            text += format_fields({{"run_id", std::to_string(r.run_id)},
                                   {"app", r.app_name},
                                   {"nprocs", std::to_string(r.nprocs)},
                                   {"timestamp", r.timestamp},
                                   {"org_level", std::to_string(r.org_level)}});
        write_text_file_atomic(table_path("run.tbl"), text);
    }

    void save_result_groups() const {
        std::string text;
        for (const auto& g : result_groups)
            text += format_fields({{"run_id", std::to_string(g.run_id)},
                                   {"group_id", std::to_string(g.group_id)},
                                   {"name", g.name},
                                   {"datasets", join_names(g.datasets)},
                                   {"types", join_types(g.datasets)},
                                   {"global_count", std::to_string(g.global_count)},
                                   {"level", std::to_string(static_cast<int>(g.level))}});
        write_text_file_atomic(table_path("access_pattern.tbl"), text);
    }

    void save_import_groups() const {
        std::string text;
        for (const auto& g : import_groups)
            text += format_fields({{"run_id", std::to_string(g.run_id)},
                                   {"group_id", std::to_string(g.group_id)},
                                   {"name", g.name},
                                   {"datasets", join_names(g.datasets)},
                                   {"types", join_types(g.datasets)},
                                   {"counts", join_list(g.counts)},
                                   {"source", g.source_file}});
        write_text_file_atomic(table_path("import.tbl"), text);
    }

    void save_exec() const {
        std::string text;
        for (const auto& e : exec_rows)
            text += format_fields({{"run_id", std::to_string(e.run_id)},
                                   {"dataset", e.dataset},
                                   {"timestep", std::to_string(e.timestep)},
                                   {"file", e.file_id},
                                   {"offset", std::to_string(e.byte_offset)},
                                   {"length", std::to_string(e.byte_length)}});
        write_text_file_atomic(table_path("execution.tbl"), text);
    }

    void save_index() const {
        std::string text_index;
        std::string text_hist;
        for (const auto& [id, rec] : index_rows) {
            text_index +=
                format_fields({{"index_id", std::to_string(id)},
                               {"total_nodes", std::to_string(rec.total_nodes)},
                               {"total_edges", std::to_string(rec.total_edges)},
                               {"nprocs", std::to_string(rec.nprocs)},
                               {"history", rec.history_file}});
            text_hist +=
                format_fields({{"index_id", std::to_string(id)},
                               {"edge_counts", join_list(rec.per_rank_edge_counts)},
                               {"node_counts", join_list(rec.per_rank_node_counts)},
                               {"byte_offsets", join_list(rec.per_rank_byte_offsets)}});
        }
        write_text_file_atomic(table_path("index.tbl"), text_index);
        write_text_file_atomic(table_path("index_history.tbl"), text_hist);
    }

    // ---- shared checks -------------------------------------------------------

    int next_group_id_locked() const {
        int n = 0;
        for (const auto& g : result_groups)
            if (g.run_id == current_run) ++n;
        for (const auto& g : import_groups)
            if (g.run_id == current_run) ++n;
        return n;
    }

    void check_dataset_names_locked(const std::vector<DatasetSpec>& specs) const {
        for (const auto& s : specs) {
            if (!valid_name(s.name))
                throw ValidationError("invalid dataset name '" + s.name + "'");
            for (const auto& g : result_groups)
                if (g.run_id == current_run)
                    for (const auto& d : g.datasets)
                        if (d.name == s.name)
                            throw ConflictError("dataset '" + s.name +
                                                "' already defined in this run");
            for (const auto& g : import_groups)
                if (g.run_id == current_run)
                    for (const auto& d : g.datasets)
                        if (d.name == s.name)
                            throw ConflictError("dataset '" + s.name +
                                                "' already defined in this run");
        }
        for (std::size_t i = 0; i < specs.size(); ++i)
            for (std::size_t j = i + 1; j < specs.size(); ++j)
                if (specs[i].name == specs[j].name)
                    throw ConflictError("dataset '" + specs[i].name +
                                        "' listed twice in one group");
    }
};

namespace {

// A handle must outlive the asynchronous write whose completion callback
// targets it, even when teardown happens on an error path that never waited
// on the ticket.
void drain_pending(std::mutex& m, std::shared_future<void>& pending) noexcept {
    std::shared_future<void> f;
    {
        std::lock_guard<std::mutex> lk(m);
        f = std::move(pending);
        pending = {};
    }
    if (f.valid()) {
        try {
            f.get();
        } catch (...) {
            // the failure already surfaced on the tickets holding this future
        }
    }
}

} // namespace

Catalog::Catalog(Catalog&&) noexcept = default;

Catalog& Catalog::operator=(Catalog&& other) noexcept {
    if (this != &other) {
        if (impl_) drain_pending(impl_->m, impl_->pending);
        impl_ = std::move(other.impl_);
    }
    return *this;
}

Catalog::~Catalog() {
    if (impl_) drain_pending(impl_->m, impl_->pending);
}

const std::vector<std::string>& Catalog::table_file_names() { return kTableFiles; }

Catalog Catalog::initialize(const std::string& app_name,
                            const std::filesystem::path& root_dir, int nprocs) {
    if (!valid_name(app_name)) throw ValidationError("invalid application name '" + app_name + "'");
    if (nprocs < 1) throw ValidationError("nprocs must be >= 1");

    std::error_code ec;
    std::filesystem::create_directories(root_dir, ec);
    if (ec)
        throw IoError("cannot create catalog directory '" + root_dir.string() +
                      "': " + ec.message());
    // Probe writability early so a bad root fails initialization, not some
    // later mutation.
    auto probe = root_dir / ".write_probe";
    try {
        write_file(probe, {});
    } catch (const IoError&) {
        throw IoError("catalog directory '" + root_dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);

    Catalog cat;
    cat.impl_ = std::make_unique<Impl>();
    cat.impl_->root = root_dir;
    for (const auto& f : kTableFiles) {
        auto p = root_dir / f;
        if (!path_exists(p)) write_file(p, {});
    }
    cat.impl_->load();

    RunRow row;
    row.run_id = cat.impl_->run_rows.empty() ? 1 : cat.impl_->run_rows.back().run_id + 1;
    row.app_name = app_name;
    row.nprocs = nprocs;
    row.timestamp = now_utc();
    row.org_level = 0;
    cat.impl_->current_run = row.run_id;
    cat.impl_->run_rows.push_back(std::move(row));
    cat.impl_->save_runs();
    return cat;
}

Catalog Catalog::inspect(const std::filesystem::path& root_dir) {
    Catalog cat;
    cat.impl_ = std::make_unique<Impl>();
    cat.impl_->root = root_dir;
    cat.impl_->readonly = true;
    for (const auto& f : kTableFiles)
        if (!path_exists(root_dir / f))
            throw IoError("no catalog at '" + root_dir.string() + "': missing " + f);
    cat.impl_->load();
    if (!cat.impl_->run_rows.empty())
        cat.impl_->current_run = cat.impl_->run_rows.back().run_id;
    return cat;
}

DataGroupDescriptor Catalog::define_result_group(const std::vector<std::string>& names,
                                                 DataType type, std::int64_t global_count,
                                                 OrgLevel level) {
    auto& im = *impl_;
    std::lock_guard<std::mutex> lk(im.m);
    im.require_writable();
    if (names.empty()) throw ValidationError("a data group needs at least one dataset");
    if (global_count < 0) throw ValidationError("global_count must be >= 0");

    std::vector<DatasetSpec> specs;
    for (const auto& n : names) specs.push_back({n, type});
    im.check_dataset_names_locked(specs);

    DataGroupDescriptor g;
    g.run_id = im.current_run;
    g.group_id = im.next_group_id_locked();
    g.name = "g" + std::to_string(g.group_id);
    g.datasets = std::move(specs);
    g.global_count = global_count;
    g.kind = GroupKind::Result;
    g.level = level;
    im.result_groups.push_back(g);

    // The run row records the file organization its result groups use.
    im.run_rows.back().org_level = static_cast<int>(level);
    im.save_result_groups();
    im.save_runs();
    return g;
}

DataGroupDescriptor Catalog::define_import_group(const std::vector<DatasetSpec>& datasets,
                                                 const std::vector<std::int64_t>& counts,
                                                 const std::string& source_file) {
    auto& im = *impl_;
    std::lock_guard<std::mutex> lk(im.m);
    im.require_writable();
    if (datasets.empty()) throw ValidationError("a data group needs at least one dataset");
    if (counts.size() != datasets.size())
        throw ValidationError("one element count per imported dataset is required");
    check_value(source_file, "import source path");
    im.check_dataset_names_locked(datasets);

    DataGroupDescriptor g;
    g.run_id = im.current_run;
    g.group_id = im.next_group_id_locked();
    g.name = "g" + std::to_string(g.group_id);
    g.datasets = datasets;
    g.counts = counts;
    g.kind = GroupKind::Import;
    g.source_file = source_file;
    im.import_groups.push_back(g);
    im.save_import_groups();
    return g;
}

void Catalog::record_offset(const std::string& dataset, int timestep,
                            const std::string& file_id, std::uint64_t byte_offset,
                            std::uint64_t byte_length) {
    auto& im = *impl_;
    std::lock_guard<std::mutex> lk(im.m);
    im.require_writable();
    if (timestep < 1) throw ValidationError("timestep must be >= 1");
    check_value(file_id, "file id");

    for (const auto& e : im.exec_rows) {
        if (e.run_id != im.current_run) continue;
        if (e.dataset == dataset && e.timestep == timestep)
            throw ConflictError("execution record for (" + dataset + ", t" +
                                std::to_string(timestep) + ") already exists");
        if (e.file_id == file_id && byte_length > 0 && e.byte_length > 0) {
            bool disjoint = byte_offset + byte_length <= e.byte_offset ||
                            e.byte_offset + e.byte_length <= byte_offset;
            if (!disjoint)
                throw ConflictError("byte range [" + std::to_string(byte_offset) + ", " +
                                    std::to_string(byte_offset + byte_length) +
                                    ") overlaps an existing record in file '" + file_id +
                                    "'");
        }
    }

    ExecutionRecord e;
    e.run_id = im.current_run;
    e.dataset = dataset;
    e.timestep = timestep;
    e.file_id = file_id;
    e.byte_offset = byte_offset;
    e.byte_length = byte_length;
    im.exec_rows.push_back(std::move(e));
    im.save_exec();
}

std::optional<ExecutionRecord> Catalog::get_offset(const std::string& dataset,
                                                   int timestep) const {
    auto& im = *impl_;
    std::lock_guard<std::mutex> lk(im.m);
    im.require_live();
    for (auto it = im.exec_rows.rbegin(); it != im.exec_rows.rend(); ++it)
        if (it->dataset == dataset && it->timestep == timestep) return *it;
    return std::nullopt;
}

std::optional<IndexHistoryRecord> Catalog::lookup_index_history(std::int64_t total_nodes,
                                                                std::int64_t total_edges,
                                                                int nprocs) const {
    auto& im = *impl_;
    std::lock_guard<std::mutex> lk(im.m);
    im.require_live();
    for (const auto& [id, rec] : im.index_rows)
        if (rec.total_nodes == total_nodes && rec.total_edges == total_edges &&
            rec.nprocs == nprocs)
            return rec;
    return std::nullopt;
}

void Catalog::insert_index_history(const IndexHistoryRecord& rec) {
    auto& im = *impl_;
    std::lock_guard<std::mutex> lk(im.m);
    im.require_writable();
    const auto n = static_cast<std::size_t>(rec.nprocs);
    if (rec.nprocs < 1) throw ValidationError("index history nprocs must be >= 1");
    if (rec.per_rank_edge_counts.size() != n || rec.per_rank_node_counts.size() != n ||
        rec.per_rank_byte_offsets.size() != n)
        throw ValidationError("per-rank lists must have exactly nprocs entries");
    check_value(rec.history_file, "history file name");
    std::int64_t ghost_inclusive = 0;
    for (auto c : rec.per_rank_edge_counts) {
        if (c < 0) throw ValidationError("negative per-rank edge count");
        ghost_inclusive += c;
    }
    if (ghost_inclusive < rec.total_edges)
        throw ValidationError("per-rank edge counts sum below total edge count");
    for (const auto& [id, existing] : im.index_rows)
        if (existing.total_nodes == rec.total_nodes &&
            existing.total_edges == rec.total_edges && existing.nprocs == rec.nprocs)
            throw ConflictError("index history for (" + std::to_string(rec.total_nodes) +
                                " nodes, " + std::to_string(rec.total_edges) + " edges, " +
                                std::to_string(rec.nprocs) + " procs) already exists");

    std::int64_t id = im.index_rows.empty() ? 1 : im.index_rows.back().first + 1;
    im.index_rows.emplace_back(id, rec);
    im.save_index();
}

void Catalog::finalize() {
    auto& im = *impl_;
    {
        std::lock_guard<std::mutex> lk(im.m);
        im.require_live();
        if (im.readonly) {
            im.finalized = true;
            return;
        }
    }
    wait_pending_write();
    std::lock_guard<std::mutex> lk(im.m);
    im.save_runs();
    im.save_result_groups();
    im.save_import_groups();
    im.save_exec();
    im.save_index();
    for (const auto& f : kTableFiles) sync_file(im.root / f);
    im.finalized = true;
}

void Catalog::set_pending_write(std::shared_future<void> f) {
    std::lock_guard<std::mutex> lk(impl_->m);
    impl_->pending = std::move(f);
}

void Catalog::wait_pending_write() {
    std::shared_future<void> f;
    {
        std::lock_guard<std::mutex> lk(impl_->m);
        f = impl_->pending;
        impl_->pending = {};
    }
    if (f.valid()) f.get();
}

std::int64_t Catalog::run_id() const {
    std::lock_guard<std::mutex> lk(impl_->m);
    return impl_->current_run;
}

const std::filesystem::path& Catalog::root() const { return impl_->root; }

std::size_t Catalog::run_count() const {
    std::lock_guard<std::mutex> lk(impl_->m);
    return impl_->run_rows.size();
}

std::vector<RunRow> Catalog::runs() const {
    std::lock_guard<std::mutex> lk(impl_->m);
    return impl_->run_rows;
}

std::vector<DataGroupDescriptor> Catalog::groups(GroupKind kind) const {
    std::lock_guard<std::mutex> lk(impl_->m);
    return kind == GroupKind::Result ? impl_->result_groups : impl_->import_groups;
}

std::vector<ExecutionRecord> Catalog::execution_records() const {
    std::lock_guard<std::mutex> lk(impl_->m);
    return impl_->exec_rows;
}

std::vector<IndexHistoryRecord> Catalog::index_records() const {
    std::lock_guard<std::mutex> lk(impl_->m);
    std::vector<IndexHistoryRecord> out;
    out.reserve(impl_->index_rows.size());
    for (const auto& [id, rec] : impl_->index_rows) out.push_back(rec);
    return out;
}

} // namespace sdm
