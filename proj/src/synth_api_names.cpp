#include "apifeat/synth.hpp"

namespace apifeat {

// Ordering matters: the generator draws background calls with weights that
// decay by rank, so common process/loader APIs dominate like they do in real
// sandbox traces.
const std::vector<std::string>& windows_api_names() {
  static const std::vector<std::string> names = {
      "LdrGetProcedureAddress", "LdrGetDllHandle", "LdrLoadDll",
      "NtQueryValueKey", "RegOpenKeyExW", "RegQueryValueExW", "RegCloseKey",
      "NtClose", "NtOpenKey", "NtCreateFile", "NtReadFile", "NtWriteFile",
      "NtQueryInformationFile", "NtOpenFile", "NtFreeVirtualMemory",
      "NtAllocateVirtualMemory", "NtProtectVirtualMemory", "NtCreateSection",
      "NtMapViewOfSection", "NtUnmapViewOfSection", "GetSystemTimeAsFileTime",
      "NtDelayExecution", "GetSystemMetrics", "GetCursorPos", "GetKeyState",
      "NtQuerySystemInformation", "NtQueryInformationProcess",
      "SetUnhandledExceptionFilter", "GetSystemInfo", "GetNativeSystemInfo",
      "CreateThread", "NtCreateThreadEx", "NtResumeThread", "NtSuspendThread",
      "NtTerminateProcess", "NtOpenProcess", "NtOpenProcessToken",
      "NtQueryInformationToken", "NtDuplicateObject", "NtOpenThread",
      "CreateProcessInternalW", "NtCreateUserProcess", "OpenSCManagerW",
      "OpenServiceW", "CreateServiceW", "StartServiceW", "ControlService",
      "RegCreateKeyExW", "RegSetValueExW", "RegDeleteValueW", "RegEnumKeyExW",
      "RegEnumValueW", "RegQueryInfoKeyW", "NtEnumerateKey",
      "NtEnumerateValueKey", "NtSetValueKey", "NtDeleteValueKey",
      "FindFirstFileExW", "FindNextFileW", "CopyFileW", "MoveFileWithProgressW",
      "DeleteFileW", "CreateDirectoryW", "RemoveDirectoryW",
      "GetFileAttributesW", "SetFileAttributesW", "GetFileSize",
      "SetFilePointer", "SetFilePointerEx", "GetFileType",
      "GetFileInformationByHandle", "NtDeviceIoControlFile", "DeviceIoControl",
      "GetVolumePathNameW", "GetVolumeNameForVolumeMountPointW",
      "GetDiskFreeSpaceExW", "GetDriveTypeW", "GetLogicalDrives",
      "GetTempPathW", "GetWindowsDirectoryW", "GetSystemDirectoryW",
      "GetModuleFileNameW", "GetModuleHandleW", "GetProcAddress",
      "LoadLibraryExW", "LoadLibraryW", "FreeLibrary", "VirtualAlloc",
      "VirtualAllocEx", "VirtualFree", "VirtualProtect", "VirtualProtectEx",
      "VirtualQuery", "VirtualQueryEx", "ReadProcessMemory",
      "WriteProcessMemory", "CreateRemoteThread", "QueueUserAPC",
      "SetWindowsHookExW", "UnhookWindowsHookEx", "CallNextHookEx",
      "GetAsyncKeyState", "GetKeyboardState", "MapVirtualKeyW",
      "RegisterHotKey", "GetForegroundWindow", "GetWindowTextW",
      "EnumWindows", "FindWindowW", "FindWindowExW", "SendMessageW",
      "PostMessageW", "SetWindowLongW", "GetWindowLongW", "CreateWindowExW",
      "DestroyWindow", "ShowWindow", "SetWindowPos", "GetClassNameW",
      "socket", "connect", "send", "recv", "closesocket", "WSAStartup",
      "WSASocketW", "bind", "listen", "accept", "gethostbyname",
      "getaddrinfo", "InternetOpenW", "InternetOpenUrlW", "InternetReadFile",
      "InternetCloseHandle", "InternetConnectW", "HttpOpenRequestW",
      "HttpSendRequestW", "HttpQueryInfoW", "URLDownloadToFileW",
      "WinHttpOpen", "WinHttpConnect", "WinHttpSendRequest",
      "WinHttpReceiveResponse", "WinHttpReadData", "DnsQuery_W",
      "CryptAcquireContextW", "CryptCreateHash", "CryptHashData",
      "CryptDeriveKey", "CryptEncrypt", "CryptDecrypt", "CryptGenKey",
      "CryptExportKey", "CryptImportKey", "CryptDestroyKey",
      "CryptReleaseContext", "BCryptOpenAlgorithmProvider",
      "BCryptGenerateSymmetricKey", "BCryptEncrypt", "BCryptDecrypt",
      "CreateMutexW", "OpenMutexW", "ReleaseMutex", "CreateEventW",
      "OpenEventW", "SetEvent", "WaitForSingleObject",
      "WaitForMultipleObjects", "CreateSemaphoreW", "OpenSemaphoreW",
      "GetTickCount", "GetTickCount64", "QueryPerformanceCounter",
      "QueryPerformanceFrequency", "GetLocalTime", "GetSystemTime",
      "SetErrorMode", "GetLastError", "SetLastError", "OutputDebugStringW",
      "IsDebuggerPresent", "CheckRemoteDebuggerPresent",
      "NtQueryPerformanceCounter", "NtYieldExecution", "GetCommandLineW",
      "GetStartupInfoW", "GetEnvironmentVariableW", "SetEnvironmentVariableW",
      "ExpandEnvironmentStringsW", "GetComputerNameW", "GetUserNameW",
      "LookupAccountSidW", "OpenProcessToken", "AdjustTokenPrivileges",
      "LookupPrivilegeValueW", "DuplicateTokenEx", "ImpersonateLoggedOnUser",
      "RevertToSelf", "InitializeSecurityDescriptor", "SetSecurityInfo",
      "CoCreateInstance", "CoInitializeEx", "CoUninitialize",
      "OleInitialize", "SHGetFolderPathW", "SHGetSpecialFolderPathW",
      "ShellExecuteExW", "ShellExecuteW", "GetNumberOfConsoleInputEvents",
      "ReadConsoleInputW", "WriteConsoleW", "AttachConsole",
      "DisableUserModeCallbackFilter"};
  return names;
}

}  // namespace apifeat
