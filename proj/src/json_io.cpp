#include "auditor/json_io.hpp"

#include "auditor/errors.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

namespace auditor {

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoFailure("read error on " + path.string());
    }
    return buf.str();
}

json read_json_file(const std::filesystem::path& path)
{
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaViolation(path.string() + ": " + e.what());
    }
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    static std::atomic<unsigned> counter{0};
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoFailure("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        }
    }
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(tid) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoFailure("cannot open " + tmp.string() + " for writing");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw IoFailure("write error on " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoFailure("cannot rename onto " + path.string() + ": " + ec.message());
    }
}

std::string dump_canonical(const json& doc)
{
    return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void write_json_file(const std::filesystem::path& path, const json& doc)
{
    write_text_file_atomic(path, dump_canonical(doc));
}

}  // namespace auditor
