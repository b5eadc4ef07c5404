#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lexirag/corpus_ingest.hpp"
#include "lexirag/error.hpp"

namespace lexirag {
namespace {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  ScratchDir() {
    std::string pattern = (fs::temp_directory_path() / "lexirag-ocr-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw Error(ErrorCode::kIoError, "cannot create scratch directory for OCR");
    }
    path_ = pattern;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

std::string ReplaceAll(std::string s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<fs::path> PageImages(const fs::path& source) {
  std::vector<fs::path> pages;
  if (fs::is_directory(source)) {
    for (const auto& entry : fs::directory_iterator(source)) {
      if (entry.is_regular_file()) pages.push_back(entry.path());
    }
    std::sort(pages.begin(), pages.end());
  } else {
    pages.push_back(source);
  }
  return pages;
}

}  // namespace

std::string PreprocessDocument(const fs::path& source_path, std::string_view ocr_command_template) {
  const std::string tmpl(ocr_command_template);
  if (tmpl.find("{input}") == std::string::npos || tmpl.find("{output}") == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "OCR command template must contain {input} and {output}");
  }
  if (!fs::exists(source_path)) {
    throw Error(ErrorCode::kNotFound, "source document " + source_path.string() + " not found");
  }
  const auto pages = PageImages(source_path);
  if (pages.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no page images under " + source_path.string());
  }

  ScratchDir scratch;
  std::string combined;
  bool any_text = false;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const fs::path output = scratch.path() / ("page-" + std::to_string(i) + ".txt");
    const fs::path errors = scratch.path() / ("page-" + std::to_string(i) + ".err");
    std::string command = ReplaceAll(tmpl, "{input}", ShellQuote(fs::absolute(pages[i]).string()));
    command = ReplaceAll(command, "{output}", ShellQuote(output.string()));
    const std::string wrapped = "( " + command + "\n) 2> " + ShellQuote(errors.string());

    const int status = std::system(wrapped.c_str());
    const int exit_code = (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    if (exit_code != 0) {
      throw Error(ErrorCode::kExternalCommand,
                  "OCR command failed on " + pages[i].string() + " (exit " +
                      std::to_string(exit_code) + "): " + ReadFile(errors));
    }

    std::string text = ReadFile(output);
    // Tesseract terminates each page with a form feed; the joiner adds its own.
    while (!text.empty() && text.back() == '\f') text.pop_back();
    if (!text.empty()) any_text = true;
    if (i > 0) combined += '\f';
    combined += text;
  }
  if (!any_text) {
    throw Error(ErrorCode::kExternalCommand,
                "OCR produced no text for any page of " + source_path.string());
  }
  return combined;
}

}  // namespace lexirag
