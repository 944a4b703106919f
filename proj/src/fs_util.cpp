#include "speechmark/fs_util.hpp"

#include <atomic>
#include <fstream>

#ifdef _WIN32
#include <process.h>
#else
#include <unistd.h>
#endif

#include "speechmark/errors.hpp"

namespace speechmark {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read file '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("error while reading '" + path.string() + "'");
  return content;
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned long> counter{0};
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.parent_path() /
                   (path.filename().string() + ".tmp." +
                    std::to_string(static_cast<long>(getpid())) + "." +
                    std::to_string(counter.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("failed to move '" + tmp.string() + "' into place: " + ec.message());
  }
}

}  // namespace speechmark
